#include "latentpatch/trace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentpatch/error.hpp"
#include "latentpatch/kernels.hpp"

namespace latentpatch {

ActivationTrace::ActivationTrace(std::size_t n_layers, std::size_t seq_len, std::size_t d_model)
    : n_layers_(n_layers),
      seq_len_(seq_len),
      d_model_(d_model),
      states_((n_layers + 1) * seq_len * d_model, 0.0f) {}

std::span<float> ActivationTrace::state(std::size_t layer, std::size_t position) {
  if (layer > n_layers_ || position >= seq_len_) throw Error("trace coordinate out of range");
  return {states_.data() + (layer * seq_len_ + position) * d_model_, d_model_};
}

std::span<const float> ActivationTrace::state(std::size_t layer, std::size_t position) const {
  if (layer > n_layers_ || position >= seq_len_) throw Error("trace coordinate out of range");
  return {states_.data() + (layer * seq_len_ + position) * d_model_, d_model_};
}

std::span<float> ActivationTrace::layer(std::size_t layer) {
  if (layer > n_layers_) throw Error("trace layer out of range");
  return {states_.data() + layer * seq_len_ * d_model_, seq_len_ * d_model_};
}

std::span<const float> ActivationTrace::layer(std::size_t layer) const {
  if (layer > n_layers_) throw Error("trace layer out of range");
  return {states_.data() + layer * seq_len_ * d_model_, seq_len_ * d_model_};
}

ActivationTrace ResidualModel::forward(std::span<const TokenId> tokens,
                                       const PatchPlan& plan) const {
  const std::size_t len = tokens.size();
  if (len == 0 || len > max_seq_len())
    throw Error("prompt length " + std::to_string(len) + " outside [1, " +
                std::to_string(max_seq_len()) + "]");
  for (std::size_t i = 0; i < len; ++i)
    if (tokens[i] >= vocab_size())
      throw Error("token id " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                  " outside vocabulary of size " + std::to_string(vocab_size()));
  plan.validate(n_layers(), len, d_model());

  ActivationTrace trace(n_layers(), len, d_model());
  auto overwrite = [&](std::size_t layer) {
    for (const auto& d : plan.directives_at_layer(layer))
      std::copy(d.value.begin(), d.value.end(), trace.state(layer, d.at.position).begin());
  };

  embed(tokens, trace.layer(0));
  overwrite(0);
  for (std::size_t j = 1; j <= n_layers(); ++j) {
    apply_layer(j, tokens, trace.layer(j - 1), trace.layer(j));
    if (!kernels::all_finite(trace.layer(j)))
      throw Error("non-finite activation after layer " + std::to_string(j));
    overwrite(j);
  }

  trace.final_distribution = decode(trace.state(n_layers(), len - 1));
  const double total =
      std::accumulate(trace.final_distribution.begin(), trace.final_distribution.end(), 0.0);
  if (!kernels::all_finite(trace.final_distribution) || std::abs(total - 1.0) > 1e-5)
    throw Error("final distribution is not normalised");
  return trace;
}

}  // namespace latentpatch
