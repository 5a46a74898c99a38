#include "latentpatch/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "latentpatch/error.hpp"

namespace latentpatch {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestSuffix = ".manifest.json";

void put_le32(std::vector<char>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

float get_le32(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  t.data.assign(product(shape), 0.0f);
  t.shape = std::move(shape);
  return t;
}

fs::path stem_of(const fs::path& path) {
  const std::string s = path.string();
  if (s.size() > kManifestSuffix.size() &&
      s.compare(s.size() - kManifestSuffix.size(), kManifestSuffix.size(), kManifestSuffix) == 0)
    return fs::path(s.substr(0, s.size() - kManifestSuffix.size()));
  return path;
}

fs::path manifest_path(const fs::path& stem) {
  return fs::path(stem_of(stem).string() + std::string(kManifestSuffix));
}

fs::path blob_path(const fs::path& stem) { return fs::path(stem_of(stem).string() + ".bin"); }

void write_tensor_file(const fs::path& stem, const nlohmann::json& header,
                       std::span<const NamedTensor> tensors) {
  const fs::path blob = blob_path(stem);
  nlohmann::json manifest = header.is_null() ? nlohmann::json::object() : header;
  manifest["blob"] = blob.filename().string();
  manifest["tensors"] = nlohmann::json::array();

  std::vector<char> bytes;
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.tensor.numel() * 4;
  bytes.reserve(total);

  for (const auto& t : tensors) {
    if (product(t.tensor.shape) != t.tensor.numel())
      throw Error("tensor '" + t.name + "': shape does not match element count");
    manifest["tensors"].push_back(
        {{"name", t.name}, {"shape", t.tensor.shape}, {"offset", bytes.size()}});
    for (float v : t.tensor.data) put_le32(bytes, v);
  }

  if (stem_of(stem).has_parent_path()) fs::create_directories(stem_of(stem).parent_path());
  {
    std::ofstream out(blob, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + blob.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + blob.string());
  }
  const fs::path mpath = manifest_path(stem);
  std::ofstream out(mpath, std::ios::trunc);
  if (!out) throw Error("cannot open '" + mpath.string() + "' for writing");
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("write failed: " + mpath.string());
}

TensorFile read_tensor_file(const fs::path& stem) {
  const fs::path mpath = manifest_path(stem);
  std::ifstream in(mpath);
  if (!in) throw Error("cannot open manifest '" + mpath.string() + "'");

  TensorFile file;
  try {
    file.header = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("malformed manifest '" + mpath.string() + "': " + e.what());
  }
  if (!file.header.is_object() || !file.header.contains("blob") ||
      !file.header.contains("tensors") || !file.header["tensors"].is_array())
    throw Error("malformed manifest '" + mpath.string() + "': needs 'blob' and 'tensors'");

  const fs::path blob = mpath.parent_path() / file.header["blob"].get<std::string>();
  std::ifstream bin(blob, std::ios::binary);
  if (!bin) throw Error("cannot open blob '" + blob.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)),
                                         std::istreambuf_iterator<char>());

  for (const auto& rec : file.header["tensors"]) {
    NamedTensor t;
    try {
      t.name = rec.at("name").get<std::string>();
      t.tensor.shape = rec.at("shape").get<std::vector<std::size_t>>();
      const auto offset = rec.at("offset").get<std::size_t>();
      const std::size_t n = product(t.tensor.shape);
      if (offset % 4 != 0 || offset + n * 4 > bytes.size())
        throw Error("tensor '" + t.name + "': offset " + std::to_string(offset) +
                    " with " + std::to_string(n) + " elements is outside the blob (" +
                    std::to_string(bytes.size()) + " bytes)");
      t.tensor.data.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const float v = get_le32(bytes.data() + offset + 4 * i);
        if (!std::isfinite(v))
          throw Error("tensor '" + t.name + "': non-finite value at element " + std::to_string(i));
        t.tensor.data[i] = v;
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed tensor record in '" + mpath.string() + "': " + e.what());
    }
    file.tensors.push_back(std::move(t));
  }
  file.header.erase("tensors");
  return file;
}

}  // namespace latentpatch
