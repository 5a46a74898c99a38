#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace latentpatch {

/// Dense row-major float32 tensor.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t numel() const { return data.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Manifest header plus tensors in manifest order.
struct TensorFile {
  nlohmann::json header;
  std::vector<NamedTensor> tensors;
};

// A file pair is addressed by its stem: `<stem>.manifest.json` + `<stem>.bin`.
// Passing the manifest path itself is accepted everywhere a stem is.
std::filesystem::path stem_of(const std::filesystem::path& path);
std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path blob_path(const std::filesystem::path& stem);

/// Writes the blob (little-endian float32, row-major, concatenated in the given
/// order, no padding) and a manifest carrying `header` plus one
/// {name, shape, offset} record per tensor.
void write_tensor_file(const std::filesystem::path& stem,
                       const nlohmann::json& header,
                       std::span<const NamedTensor> tensors);

/// Reads tensors at their declared byte offsets. Layout is never inferred.
/// Non-finite values are rejected with the tensor's name.
TensorFile read_tensor_file(const std::filesystem::path& stem);

}  // namespace latentpatch
