#include "latentpatch/weights.hpp"

#include <algorithm>
#include <random>

#include "latentpatch/error.hpp"
#include "latentpatch/kernels.hpp"

namespace latentpatch {

namespace {

constexpr const char* kWeightsFormat = "latentpatch-weights";

bool is_norm_tensor(const std::string& name) {
  return name.find("norm.") != std::string::npos;
}

bool is_bias(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
}

}  // namespace

void WeightStore::insert(std::string name, Tensor tensor) {
  if (tensors_.contains(name)) throw Error("duplicate tensor '" + name + "'");
  order_.push_back(name);
  tensors_.emplace(std::move(name), std::move(tensor));
}

bool WeightStore::contains(std::string_view name) const {
  return tensors_.find(name) != tensors_.end();
}

const Tensor& WeightStore::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("missing tensor '" + std::string(name) + "'");
  return it->second;
}

Tensor& WeightStore::at(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("missing tensor '" + std::string(name) + "'");
  return it->second;
}

bool operator==(const WeightStore& a, const WeightStore& b) {
  return a.order_ == b.order_ && a.tensors_ == b.tensors_;
}

void validate_weights(const ModelSpec& spec, const WeightStore& weights) {
  spec.validate();
  const auto layout = tensor_layout(spec);
  for (const auto& name : weights.names()) {
    const bool known = std::any_of(layout.begin(), layout.end(),
                                   [&](const TensorDecl& d) { return d.name == name; });
    if (!known) throw Error("unexpected tensor '" + name + "'");
  }
  for (const auto& decl : layout) {
    if (!weights.contains(decl.name)) throw Error("missing tensor '" + decl.name + "'");
    const Tensor& t = weights.at(decl.name);
    if (t.shape != decl.shape || t.numel() != decl.numel()) {
      std::string want, got;
      for (auto d : decl.shape) want += std::to_string(d) + "x";
      for (auto d : t.shape) got += std::to_string(d) + "x";
      if (!want.empty()) want.pop_back();
      if (!got.empty()) got.pop_back();
      throw Error("tensor '" + decl.name + "': shape mismatch, expected " + want +
                  " got " + got);
    }
    if (!kernels::all_finite(t.data))
      throw Error("tensor '" + decl.name + "': non-finite value");
  }
}

WeightStore zero_weights(const ModelSpec& spec) {
  spec.validate();
  WeightStore w;
  for (const auto& decl : tensor_layout(spec)) w.insert(decl.name, Tensor::zeros(decl.shape));
  return w;
}

WeightStore random_weights(const ModelSpec& spec, std::uint64_t seed, float stddev) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, stddev);
  WeightStore w;
  for (const auto& decl : tensor_layout(spec)) {
    Tensor t = Tensor::zeros(decl.shape);
    if (is_norm_tensor(decl.name)) {
      if (!is_bias(decl.name)) std::fill(t.data.begin(), t.data.end(), 1.0f);
    } else {
      for (float& v : t.data) v = normal(rng);
    }
    w.insert(decl.name, std::move(t));
  }
  return w;
}

LoadedModel load_model(const std::filesystem::path& manifest) {
  TensorFile file = read_tensor_file(manifest);
  if (file.header.value("format", std::string()) != kWeightsFormat)
    throw Error("malformed manifest '" + manifest_path(manifest).string() +
                "': format is not " + kWeightsFormat);
  if (!file.header.contains("spec"))
    throw Error("malformed manifest '" + manifest_path(manifest).string() + "': missing spec");

  LoadedModel model;
  model.spec = model_spec_from_json(file.header["spec"]);
  for (auto& t : file.tensors) model.weights.insert(std::move(t.name), std::move(t.tensor));
  validate_weights(model.spec, model.weights);
  return model;
}

void save_model(const ModelSpec& spec, const WeightStore& weights,
                const std::filesystem::path& stem) {
  validate_weights(spec, weights);
  std::vector<NamedTensor> tensors;
  for (const auto& decl : tensor_layout(spec))
    tensors.push_back({decl.name, weights.at(decl.name)});
  const nlohmann::json header = {{"format", kWeightsFormat}, {"version", 1}, {"spec", to_json(spec)}};
  write_tensor_file(stem, header, tensors);
}

}  // namespace latentpatch
