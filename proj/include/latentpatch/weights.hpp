#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "latentpatch/model_spec.hpp"
#include "latentpatch/tensor_file.hpp"

namespace latentpatch {

/// Named tensor table. Iteration follows insertion order so that saving is
/// reproducible byte for byte.
class WeightStore {
 public:
  void insert(std::string name, Tensor tensor);
  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);
  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  friend bool operator==(const WeightStore& a, const WeightStore& b);

 private:
  std::map<std::string, Tensor, std::less<>> tensors_;
  std::vector<std::string> order_;
};

/// Checks that every tensor of tensor_layout(spec) is present with its exact
/// shape and only finite entries. Errors name the offending tensor.
void validate_weights(const ModelSpec& spec, const WeightStore& weights);

WeightStore zero_weights(const ModelSpec& spec);

/// Seeded Gaussian init (std 0.02) for projections and embeddings; norm gains
/// are 1 and norm biases 0.
WeightStore random_weights(const ModelSpec& spec, std::uint64_t seed, float stddev = 0.02f);

struct LoadedModel {
  ModelSpec spec;
  WeightStore weights;
};

LoadedModel load_model(const std::filesystem::path& manifest);

/// Writes `<stem>.manifest.json` and `<stem>.bin` in tensor_layout order.
void save_model(const ModelSpec& spec, const WeightStore& weights,
                const std::filesystem::path& stem);

}  // namespace latentpatch
