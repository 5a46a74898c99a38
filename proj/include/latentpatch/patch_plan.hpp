#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "latentpatch/types.hpp"

namespace latentpatch {

struct PatchDirective {
  Coord at;
  std::span<const float> value;
};

/// A set of residual-stream overwrites. Each (layer, position) appears at most
/// once; adding a second, different vector at the same coordinate throws.
class PatchPlan {
 public:
  PatchPlan() = default;
  explicit PatchPlan(std::string label) : label_(std::move(label)) {}

  void add(std::size_t layer, std::size_t position, std::vector<float> value);

  /// Union of both plans. Conflicting coordinates are an error; identical
  /// duplicates collapse.
  void merge(const PatchPlan& other);

  bool empty() const { return directives_.empty(); }
  std::size_t size() const { return directives_.size(); }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  /// Directives ordered by (layer, position).
  std::vector<PatchDirective> directives() const;
  std::vector<PatchDirective> directives_at_layer(std::size_t layer) const;
  const std::vector<float>* find(Coord c) const;

  /// Throws Error unless every directive addresses layer <= n_layers,
  /// position < seq_len and carries exactly d_model values.
  void validate(std::size_t n_layers, std::size_t seq_len, std::size_t d_model) const;

  friend bool operator==(const PatchPlan& a, const PatchPlan& b) {
    return a.directives_ == b.directives_;
  }

 private:
  std::map<Coord, std::vector<float>> directives_;
  std::string label_;
};

}  // namespace latentpatch
