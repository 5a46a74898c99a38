#include "latentpatch/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "latentpatch/error.hpp"

namespace latentpatch::kernels {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("kernel shape mismatch: ") + what);
}

}  // namespace

void matmul(std::span<const float> a, std::span<const float> b,
            std::span<float> out, std::size_t m, std::size_t k, std::size_t n) {
  require(a.size() == m * k, "matmul lhs");
  require(b.size() == k * n, "matmul rhs");
  require(out.size() == m * n, "matmul out");
  std::fill(out.begin(), out.end(), 0.0f);
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < m; ++i) {
    float* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = a[i * k + p];
      const float* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

void linear(std::span<const float> weight, std::span<const float> x,
            std::span<float> y) {
  require(weight.size() == x.size() * y.size(), "linear");
  const std::size_t in = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    const float* w = weight.data() + r * in;
    float acc = 0.0f;
    for (std::size_t c = 0; c < in; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
}

void softmax(std::span<const float> logits, std::span<float> out) {
  require(logits.size() == out.size() && !logits.empty(), "softmax");
  const float mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double e = std::exp(static_cast<double>(logits[i]) - mx);
    out[i] = static_cast<float>(e);
    total += e;
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = static_cast<float>(
        std::exp(static_cast<double>(logits[i]) - mx) / total);
  }
}

void rms_norm(std::span<const float> x, std::span<const float> gain, float eps,
              std::span<float> out) {
  require(x.size() == gain.size() && x.size() == out.size(), "rms_norm");
  double ss = 0.0;
  for (float v : x) ss += static_cast<double>(v) * v;
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + eps);
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<float>(x[i] * inv) * gain[i];
}

void layer_norm(std::span<const float> x, std::span<const float> gain,
                std::span<const float> bias, float eps, std::span<float> out) {
  require(x.size() == gain.size() && x.size() == bias.size() &&
              x.size() == out.size(),
          "layer_norm");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (float v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<float>((x[i] - mean) * inv) * gain[i] + bias[i];
}

void rotary_position_transform(std::span<float> head, std::size_t position,
                               float base) {
  require(head.size() % 2 == 0, "rotary head_dim must be even");
  const double dim = static_cast<double>(head.size());
  for (std::size_t p = 0; p + 1 < head.size(); p += 2) {
    const double freq = std::pow(static_cast<double>(base), -static_cast<double>(p) / dim);
    const double angle = static_cast<double>(position) * freq;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double x0 = head[p];
    const double x1 = head[p + 1];
    head[p] = static_cast<float>(x0 * c - x1 * s);
    head[p + 1] = static_cast<float>(x0 * s + x1 * c);
  }
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

float gelu(float x) {
  return 0.5f * x * (1.0f + std::erf(x / std::numbers::sqrt2_v<float>));
}

void gated_mlp(std::span<const float> x, std::span<const float> w_gate,
               std::span<const float> w_up, std::span<const float> w_down,
               std::span<float> out) {
  require(!x.empty() && w_gate.size() % x.size() == 0, "gated_mlp gate");
  const std::size_t d_ff = w_gate.size() / x.size();
  require(w_up.size() == w_gate.size(), "gated_mlp up");
  require(w_down.size() == out.size() * d_ff, "gated_mlp down");
  std::vector<float> gate(d_ff), up(d_ff);
  linear(w_gate, x, gate);
  linear(w_up, x, up);
  for (std::size_t i = 0; i < d_ff; ++i) gate[i] = silu(gate[i]) * up[i];
  linear(w_down, gate, out);
}

void plain_mlp(std::span<const float> x, std::span<const float> w_in,
               std::span<const float> w_out, std::span<float> out) {
  require(!x.empty() && w_in.size() % x.size() == 0, "plain_mlp in");
  const std::size_t d_ff = w_in.size() / x.size();
  require(w_out.size() == out.size() * d_ff, "plain_mlp out");
  std::vector<float> hidden(d_ff);
  linear(w_in, x, hidden);
  for (float& h : hidden) h = gelu(h);
  linear(w_out, hidden, out);
}

bool all_finite(std::span<const float> x) {
  return std::all_of(x.begin(), x.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace latentpatch::kernels
