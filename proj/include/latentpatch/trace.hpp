#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latentpatch/patch_plan.hpp"
#include "latentpatch/types.hpp"

namespace latentpatch {

/// The full residual stream of one forward pass: state(j, i) is h^(j)_i with
/// j = 0 the embedding row, plus the next-token distribution at the last
/// position.
class ActivationTrace {
 public:
  ActivationTrace(std::size_t n_layers, std::size_t seq_len, std::size_t d_model);

  std::size_t n_layers() const { return n_layers_; }
  std::size_t seq_len() const { return seq_len_; }
  std::size_t d_model() const { return d_model_; }

  std::span<float> state(std::size_t layer, std::size_t position);
  std::span<const float> state(std::size_t layer, std::size_t position) const;
  // All positions of one layer, seq_len x d_model row-major.
  std::span<float> layer(std::size_t layer);
  std::span<const float> layer(std::size_t layer) const;

  std::vector<float> final_distribution;

  friend bool operator==(const ActivationTrace&, const ActivationTrace&) = default;

 private:
  std::size_t n_layers_;
  std::size_t seq_len_;
  std::size_t d_model_;
  std::vector<float> states_;
};

/// Anything with a residual stream that can be read and overwritten:
/// the weight-based transformer and the analytic oracles.
///
/// forward() owns the patch semantics shared by all implementations: layer j
/// reads the (possibly patched) states of layer j-1, adds its update, then
/// every directive at layer j overwrites its coordinate. Directives at layer 0
/// replace embedding rows. Implementations are immutable; concurrent forward
/// calls are safe.
class ResidualModel {
 public:
  virtual ~ResidualModel() = default;

  virtual std::size_t n_layers() const = 0;
  virtual std::size_t d_model() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t max_seq_len() const = 0;

  ActivationTrace forward(std::span<const TokenId> tokens,
                          const PatchPlan& plan = PatchPlan()) const;

 protected:
  // Writes h^(0) for every position into `out` (seq_len x d_model).
  virtual void embed(std::span<const TokenId> tokens, std::span<float> out) const = 0;
  // Writes h^(j) = h^(j-1) + f_j(h^(j-1)) for every position.
  virtual void apply_layer(std::size_t layer, std::span<const TokenId> tokens,
                           std::span<const float> prev, std::span<float> next) const = 0;
  // Next-token distribution from the final state of the last position.
  virtual std::vector<float> decode(std::span<const float> last_state) const = 0;
};

}  // namespace latentpatch
