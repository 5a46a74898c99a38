#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace latentpatch {

enum class NormKind { rms, layernorm };
enum class PosKind { rotary, learned_absolute };
enum class MlpKind { gated, plain };

/// Architecture of the decoder-only transformer. Defaults are the desk-scale
/// Llama-style toy: 8 layers of width 64, 4 heads, gated MLP, RMS norm, RoPE.
struct ModelSpec {
  std::size_t d_model = 64;
  std::size_t n_layers = 8;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 512;
  std::size_t max_seq_len = 256;
  NormKind norm_kind = NormKind::rms;
  PosKind pos_kind = PosKind::rotary;
  MlpKind mlp_kind = MlpKind::gated;
  float norm_eps = 1e-5f;
  float rope_base = 10000.0f;

  std::size_t head_dim() const { return d_model / n_heads; }

  /// Throws Error when a dimension is zero, heads do not divide d_model,
  /// rotary heads have odd width, or norm_eps is not positive.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct TensorDecl {
  std::string name;
  std::vector<std::size_t> shape;

  std::size_t numel() const;
};

/// Every tensor the spec requires, in canonical (manifest) order.
std::vector<TensorDecl> tensor_layout(const ModelSpec& spec);

std::string block_prefix(std::size_t block);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

std::string to_string(NormKind k);
std::string to_string(PosKind k);
std::string to_string(MlpKind k);

}  // namespace latentpatch
