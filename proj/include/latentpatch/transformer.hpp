#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "latentpatch/model_spec.hpp"
#include "latentpatch/trace.hpp"
#include "latentpatch/weights.hpp"

namespace latentpatch {

/// Pre-norm decoder-only transformer over float32 weights. Each block is
/// causal multi-head self-attention followed by an MLP; both sublayers add
/// into the residual stream, so h^(j) = h^(j-1) + f_j(h^(j-1)_{0..i}).
class Transformer final : public ResidualModel {
 public:
  Transformer(ModelSpec spec, WeightStore weights);
  // Blocks hold spans into weights_; moves keep them valid, copies would not.
  Transformer(const Transformer&) = delete;
  Transformer& operator=(const Transformer&) = delete;
  Transformer(Transformer&&) = default;
  Transformer& operator=(Transformer&&) = default;

  static Transformer load(const std::filesystem::path& manifest);

  const ModelSpec& spec() const { return spec_; }
  const WeightStore& weights() const { return weights_; }

  std::size_t n_layers() const override { return spec_.n_layers; }
  std::size_t d_model() const override { return spec_.d_model; }
  std::size_t vocab_size() const override { return spec_.vocab_size; }
  std::size_t max_seq_len() const override { return spec_.max_seq_len; }

  /// Test hook: recomputes f_j for a single position from the layer j-1
  /// states of positions 0..position (`prev` is seq_len x d_model, later rows
  /// are ignored). Uses a single-query path independent of apply_layer.
  std::vector<float> layer_update(std::size_t layer, std::span<const float> prev,
                                  std::size_t position) const;

 protected:
  void embed(std::span<const TokenId> tokens, std::span<float> out) const override;
  void apply_layer(std::size_t layer, std::span<const TokenId> tokens,
                   std::span<const float> prev, std::span<float> next) const override;
  std::vector<float> decode(std::span<const float> last_state) const override;

 private:
  struct Block {
    std::span<const float> attn_norm_w, attn_norm_b;
    std::span<const float> wq, wk, wv, wo;
    std::span<const float> mlp_norm_w, mlp_norm_b;
    std::span<const float> w_gate, w_up, w_down;  // gated
    std::span<const float> w_in, w_out;           // plain
  };

  void normalize(std::span<const float> x, std::span<const float> gain,
                 std::span<const float> bias, std::span<float> out) const;
  void mlp(const Block& b, std::span<const float> x, std::span<float> out) const;
  void project_head_rope(std::span<float> vec, std::size_t position) const;

  ModelSpec spec_;
  WeightStore weights_;
  std::vector<Block> blocks_;
  std::span<const float> tok_emb_, pos_emb_, final_norm_w_, final_norm_b_, unembed_;
};

}  // namespace latentpatch
