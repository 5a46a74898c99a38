#include "latentpatch/patch_plan.hpp"

#include "latentpatch/error.hpp"

namespace latentpatch {

namespace {

std::string coord_str(Coord c) {
  return "(layer " + std::to_string(c.layer) + ", position " + std::to_string(c.position) + ")";
}

}  // namespace

void PatchPlan::add(std::size_t layer, std::size_t position, std::vector<float> value) {
  const Coord c{layer, position};
  auto it = directives_.find(c);
  if (it != directives_.end()) {
    if (it->second != value)
      throw Error("patch plan conflict at " + coord_str(c) + ": two different vectors");
    return;
  }
  directives_.emplace(c, std::move(value));
}

void PatchPlan::merge(const PatchPlan& other) {
  for (const auto& [c, v] : other.directives_) {
    auto it = directives_.find(c);
    if (it != directives_.end() && it->second != v)
      throw Error("patch plan conflict at " + coord_str(c) + ": two different vectors");
  }
  for (const auto& [c, v] : other.directives_) directives_.emplace(c, v);
}

std::vector<PatchDirective> PatchPlan::directives() const {
  std::vector<PatchDirective> out;
  out.reserve(directives_.size());
  for (const auto& [c, v] : directives_) out.push_back({c, v});
  return out;
}

std::vector<PatchDirective> PatchPlan::directives_at_layer(std::size_t layer) const {
  std::vector<PatchDirective> out;
  for (auto it = directives_.lower_bound(Coord{layer, 0});
       it != directives_.end() && it->first.layer == layer; ++it)
    out.push_back({it->first, it->second});
  return out;
}

const std::vector<float>* PatchPlan::find(Coord c) const {
  auto it = directives_.find(c);
  return it == directives_.end() ? nullptr : &it->second;
}

void PatchPlan::validate(std::size_t n_layers, std::size_t seq_len, std::size_t d_model) const {
  for (const auto& [c, v] : directives_) {
    if (c.layer > n_layers)
      throw Error("patch directive " + coord_str(c) + ": layer outside [0, " +
                  std::to_string(n_layers) + "]");
    if (c.position >= seq_len)
      throw Error("patch directive " + coord_str(c) + ": position outside prompt of length " +
                  std::to_string(seq_len));
    if (v.size() != d_model)
      throw Error("patch directive " + coord_str(c) + ": vector width " +
                  std::to_string(v.size()) + " != d_model " + std::to_string(d_model));
  }
}

}  // namespace latentpatch
