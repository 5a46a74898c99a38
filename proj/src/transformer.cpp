#include "latentpatch/transformer.hpp"

#include <algorithm>
#include <cmath>

#include "latentpatch/error.hpp"
#include "latentpatch/kernels.hpp"

namespace latentpatch {

namespace {

std::span<const float> row(std::span<const float> m, std::size_t r, std::size_t width) {
  return m.subspan(r * width, width);
}

std::span<float> row(std::span<float> m, std::size_t r, std::size_t width) {
  return m.subspan(r * width, width);
}

}  // namespace

Transformer::Transformer(ModelSpec spec, WeightStore weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  validate_weights(spec_, weights_);
  const bool ln = spec_.norm_kind == NormKind::layernorm;
  auto get = [&](const std::string& name) -> std::span<const float> {
    return weights_.at(name).data;
  };

  tok_emb_ = get("tok_embeddings");
  if (spec_.pos_kind == PosKind::learned_absolute) pos_emb_ = get("pos_embeddings");
  final_norm_w_ = get("final_norm.weight");
  if (ln) final_norm_b_ = get("final_norm.bias");
  unembed_ = get("unembed");

  for (std::size_t b = 0; b < spec_.n_layers; ++b) {
    const std::string p = block_prefix(b);
    Block blk;
    blk.attn_norm_w = get(p + "attn_norm.weight");
    blk.mlp_norm_w = get(p + "mlp_norm.weight");
    if (ln) {
      blk.attn_norm_b = get(p + "attn_norm.bias");
      blk.mlp_norm_b = get(p + "mlp_norm.bias");
    }
    blk.wq = get(p + "attn.wq");
    blk.wk = get(p + "attn.wk");
    blk.wv = get(p + "attn.wv");
    blk.wo = get(p + "attn.wo");
    if (spec_.mlp_kind == MlpKind::gated) {
      blk.w_gate = get(p + "mlp.w_gate");
      blk.w_up = get(p + "mlp.w_up");
      blk.w_down = get(p + "mlp.w_down");
    } else {
      blk.w_in = get(p + "mlp.w_in");
      blk.w_out = get(p + "mlp.w_out");
    }
    blocks_.push_back(blk);
  }
}

Transformer Transformer::load(const std::filesystem::path& manifest) {
  LoadedModel m = load_model(manifest);
  return Transformer(std::move(m.spec), std::move(m.weights));
}

void Transformer::normalize(std::span<const float> x, std::span<const float> gain,
                           std::span<const float> bias, std::span<float> out) const {
  if (spec_.norm_kind == NormKind::rms)
    kernels::rms_norm(x, gain, spec_.norm_eps, out);
  else
    kernels::layer_norm(x, gain, bias, spec_.norm_eps, out);
}

void Transformer::mlp(const Block& b, std::span<const float> x, std::span<float> out) const {
  if (spec_.mlp_kind == MlpKind::gated)
    kernels::gated_mlp(x, b.w_gate, b.w_up, b.w_down, out);
  else
    kernels::plain_mlp(x, b.w_in, b.w_out, out);
}

void Transformer::project_head_rope(std::span<float> vec, std::size_t position) const {
  if (spec_.pos_kind != PosKind::rotary) return;
  const std::size_t hd = spec_.head_dim();
  for (std::size_t h = 0; h < spec_.n_heads; ++h)
    kernels::rotary_position_transform(vec.subspan(h * hd, hd), position, spec_.rope_base);
}

void Transformer::embed(std::span<const TokenId> tokens, std::span<float> out) const {
  const std::size_t d = spec_.d_model;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto dst = row(out, i, d);
    auto src = row(tok_emb_, tokens[i], d);
    std::copy(src.begin(), src.end(), dst.begin());
    if (spec_.pos_kind == PosKind::learned_absolute) {
      auto pos = row(pos_emb_, i, d);
      for (std::size_t c = 0; c < d; ++c) dst[c] += pos[c];
    }
  }
}

void Transformer::apply_layer(std::size_t layer, std::span<const TokenId> tokens,
                              std::span<const float> prev, std::span<float> next) const {
  const Block& b = blocks_.at(layer - 1);
  const std::size_t d = spec_.d_model;
  const std::size_t n = tokens.size();
  const std::size_t hd = spec_.head_dim();
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

  std::vector<float> normed(n * d), q(n * d), k(n * d), v(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    normalize(row(prev, i, d), b.attn_norm_w, b.attn_norm_b, row(std::span<float>(normed), i, d));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto x = row(std::span<const float>(normed), i, d);
    kernels::linear(b.wq, x, row(std::span<float>(q), i, d));
    kernels::linear(b.wk, x, row(std::span<float>(k), i, d));
    kernels::linear(b.wv, x, row(std::span<float>(v), i, d));
    project_head_rope(row(std::span<float>(q), i, d), i);
    project_head_rope(row(std::span<float>(k), i, d), i);
  }

  std::vector<float> mixed(d), attn_out(d), mid(d), normed2(d), mlp_out(d);
  std::vector<float> scores(n), probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t h = 0; h < spec_.n_heads; ++h) {
      const std::size_t off = h * hd;
      for (std::size_t t = 0; t <= i; ++t) {
        float s = 0.0f;
        for (std::size_t c = 0; c < hd; ++c) s += q[i * d + off + c] * k[t * d + off + c];
        scores[t] = s * scale;
      }
      kernels::softmax(std::span<const float>(scores).first(i + 1), std::span<float>(probs).first(i + 1));
      for (std::size_t c = 0; c < hd; ++c) {
        float acc = 0.0f;
        for (std::size_t t = 0; t <= i; ++t) acc += probs[t] * v[t * d + off + c];
        mixed[off + c] = acc;
      }
    }
    kernels::linear(b.wo, mixed, attn_out);

    auto x = row(prev, i, d);
    for (std::size_t c = 0; c < d; ++c) mid[c] = x[c] + attn_out[c];
    normalize(mid, b.mlp_norm_w, b.mlp_norm_b, normed2);
    mlp(b, normed2, mlp_out);
    auto y = row(next, i, d);
    for (std::size_t c = 0; c < d; ++c) y[c] = mid[c] + mlp_out[c];
  }
}

std::vector<float> Transformer::layer_update(std::size_t layer, std::span<const float> prev,
                                             std::size_t position) const {
  if (layer == 0 || layer > spec_.n_layers) throw Error("layer_update: layer out of range");
  const std::size_t d = spec_.d_model;
  if (prev.size() % d != 0 || position >= prev.size() / d)
    throw Error("layer_update: position out of range");
  const Block& b = blocks_[layer - 1];
  const std::size_t hd = spec_.head_dim();

  std::vector<float> x(d), qi(d), kt(d), vt(d);
  normalize(row(prev, position, d), b.attn_norm_w, b.attn_norm_b, x);
  kernels::linear(b.wq, x, qi);
  project_head_rope(qi, position);

  // Keys/values for the visible prefix, one row at a time.
  std::vector<std::vector<float>> keys, values;
  for (std::size_t t = 0; t <= position; ++t) {
    normalize(row(prev, t, d), b.attn_norm_w, b.attn_norm_b, x);
    kernels::linear(b.wk, x, kt);
    kernels::linear(b.wv, x, vt);
    project_head_rope(kt, t);
    keys.push_back(kt);
    values.push_back(vt);
  }

  std::vector<float> mixed(d, 0.0f);
  for (std::size_t h = 0; h < spec_.n_heads; ++h) {
    std::vector<double> w(position + 1);
    double mx = -INFINITY;
    for (std::size_t t = 0; t <= position; ++t) {
      double s = 0.0;
      for (std::size_t c = 0; c < hd; ++c) s += static_cast<double>(qi[h * hd + c]) * keys[t][h * hd + c];
      w[t] = s / std::sqrt(static_cast<double>(hd));
      mx = std::max(mx, w[t]);
    }
    double z = 0.0;
    for (double& e : w) z += (e = std::exp(e - mx));
    for (std::size_t c = 0; c < hd; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t <= position; ++t) acc += w[t] / z * values[t][h * hd + c];
      mixed[h * hd + c] = static_cast<float>(acc);
    }
  }

  std::vector<float> attn(d), mid(d), normed(d), m(d), out(d);
  kernels::linear(b.wo, mixed, attn);
  auto xi = row(prev, position, d);
  for (std::size_t c = 0; c < d; ++c) mid[c] = xi[c] + attn[c];
  normalize(mid, b.mlp_norm_w, b.mlp_norm_b, normed);
  mlp(b, normed, m);
  for (std::size_t c = 0; c < d; ++c) out[c] = attn[c] + m[c];
  return out;
}

std::vector<float> Transformer::decode(std::span<const float> last_state) const {
  const std::size_t d = spec_.d_model;
  std::vector<float> normed(d), logits(spec_.vocab_size), probs(spec_.vocab_size);
  normalize(last_state, final_norm_w_, final_norm_b_, normed);
  kernels::linear(unembed_, normed, logits);
  kernels::softmax(logits, probs);
  return probs;
}

}  // namespace latentpatch
