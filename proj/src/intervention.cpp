#include "latentpatch/intervention.hpp"

#include <algorithm>

#include "latentpatch/error.hpp"
#include "latentpatch/kernels.hpp"
#include "latentpatch/tensor_file.hpp"

namespace latentpatch {

namespace {

constexpr const char* kBankFormat = "latentpatch-bank";

std::string coord_str(Coord c) {
  return "(layer " + std::to_string(c.layer) + ", position " + std::to_string(c.position) + ")";
}

}  // namespace

nlohmann::json to_json(const SourceMeta& meta) {
  return {{"prompt_id", meta.prompt_id},
          {"concept", meta.concept_id},
          {"lang_in", meta.lang_in},
          {"lang_out", meta.lang_out}};
}

SourceMeta source_meta_from_json(const nlohmann::json& j) {
  return {j.value("prompt_id", ""), j.value("concept", ""), j.value("lang_in", ""),
          j.value("lang_out", "")};
}

LatentBank::LatentBank(std::size_t d_model, SourceMeta meta)
    : d_model_(d_model), meta_(std::move(meta)) {
  if (d_model_ == 0) throw Error("latent bank: d_model must be positive");
}

void LatentBank::insert(Coord at, std::vector<float> value) {
  if (value.size() != d_model_)
    throw Error("latent bank: vector at " + coord_str(at) + " has width " +
                std::to_string(value.size()) + ", expected " + std::to_string(d_model_));
  if (!kernels::all_finite(value))
    throw Error("latent bank: non-finite vector at " + coord_str(at));
  entries_.insert_or_assign(at, std::move(value));
}

const std::vector<float>& LatentBank::at(Coord at) const {
  auto it = entries_.find(at);
  if (it == entries_.end()) throw Error("latent bank: no entry at " + coord_str(at));
  return it->second;
}

std::set<std::size_t> LatentBank::layers() const {
  std::set<std::size_t> out;
  for (const auto& [c, v] : entries_) out.insert(c.layer);
  return out;
}

std::vector<std::size_t> all_layers(std::size_t n_layers) {
  std::vector<std::size_t> out(n_layers + 1);
  for (std::size_t j = 0; j <= n_layers; ++j) out[j] = j;
  return out;
}

LatentBank extract_latents(const ActivationTrace& trace, std::span<const std::size_t> positions,
                           std::span<const std::size_t> layers, SourceMeta meta) {
  LatentBank bank(trace.d_model(), std::move(meta));
  for (std::size_t layer : layers) {
    if (layer > trace.n_layers())
      throw Error("extract_latents: layer " + std::to_string(layer) + " outside [0, " +
                  std::to_string(trace.n_layers()) + "]");
    for (std::size_t pos : positions) {
      if (pos >= trace.seq_len())
        throw Error("extract_latents: position " + std::to_string(pos) +
                    " outside prompt of length " + std::to_string(trace.seq_len()));
      auto s = trace.state(layer, pos);
      bank.insert({layer, pos}, std::vector<float>(s.begin(), s.end()));
    }
  }
  return bank;
}

LatentBank extract_latents(const ResidualModel& model, std::span<const TokenId> prompt,
                           std::span<const std::size_t> positions,
                           std::span<const std::size_t> layers, SourceMeta meta) {
  return extract_latents(model.forward(prompt), positions, layers, std::move(meta));
}

PatchPlan single_layer_plan(const LatentBank& bank, std::size_t layer, std::size_t src_pos,
                            std::size_t tgt_pos) {
  PatchPlan plan("single layer " + std::to_string(layer));
  plan.add(layer, tgt_pos, bank.at({layer, src_pos}));
  return plan;
}

PatchPlan span_plan(const LatentBank& bank, std::size_t layer_start, std::size_t n_layers,
                    std::size_t src_pos, std::size_t tgt_pos) {
  if (layer_start > n_layers)
    throw Error("span_plan: start layer " + std::to_string(layer_start) + " beyond n_layers " +
                std::to_string(n_layers));
  PatchPlan plan("span " + std::to_string(layer_start) + ".." + std::to_string(n_layers));
  for (std::size_t a = layer_start; a <= n_layers; ++a) plan.add(a, tgt_pos, bank.at({a, src_pos}));
  return plan;
}

LatentBank mean_banks(std::span<const LatentBank> banks,
                      std::span<const std::size_t> source_positions,
                      std::size_t result_position) {
  if (banks.empty()) throw Error("mean_banks: need at least one bank");
  if (source_positions.size() != banks.size())
    throw Error("mean_banks: one source position per bank required");

  const std::size_t d = banks.front().d_model();
  auto layers_of = [](const LatentBank& b, std::size_t pos) {
    std::set<std::size_t> out;
    for (const auto& [c, v] : b.entries())
      if (c.position == pos) out.insert(c.layer);
    return out;
  };
  const std::set<std::size_t> layers = layers_of(banks.front(), source_positions.front());
  if (layers.empty()) throw Error("mean_banks: first bank has no entries at its source position");
  for (std::size_t b = 0; b < banks.size(); ++b) {
    if (banks[b].d_model() != d) throw Error("mean_banks: width mismatch between banks");
    if (layers_of(banks[b], source_positions[b]) != layers)
      throw Error("mean_banks: bank " + std::to_string(b) + " has an inconsistent layer set");
  }

  SourceMeta meta = banks.front().meta();
  meta.prompt_id = "mean of " + std::to_string(banks.size());
  LatentBank out(d, meta);
  const double k = static_cast<double>(banks.size());
  for (std::size_t layer : layers) {
    std::vector<double> acc(d, 0.0);
    for (std::size_t b = 0; b < banks.size(); ++b) {
      const auto& v = banks[b].at({layer, source_positions[b]});
      for (std::size_t c = 0; c < d; ++c) acc[c] += v[c];
    }
    std::vector<float> mean(d);
    for (std::size_t c = 0; c < d; ++c) mean[c] = static_cast<float>(acc[c] / k);
    out.insert({layer, result_position}, std::move(mean));
  }
  return out;
}

void save_bank(const LatentBank& bank, const std::filesystem::path& stem) {
  std::vector<NamedTensor> tensors;
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& [c, v] : bank.entries()) {
    tensors.push_back({"layer." + std::to_string(c.layer) + ".pos." + std::to_string(c.position),
                       Tensor{{bank.d_model()}, v}});
    coords.push_back({c.layer, c.position});
  }
  const nlohmann::json header = {{"format", kBankFormat},
                                 {"version", 1},
                                 {"d_model", bank.d_model()},
                                 {"source_meta", to_json(bank.meta())},
                                 {"coords", coords}};
  write_tensor_file(stem, header, tensors);
}

LatentBank load_bank(const std::filesystem::path& stem) {
  TensorFile file = read_tensor_file(stem);
  if (file.header.value("format", std::string()) != kBankFormat)
    throw Error("'" + manifest_path(stem).string() + "' is not a latent bank manifest");
  try {
    const auto coords = file.header.at("coords");
    if (coords.size() != file.tensors.size())
      throw Error("latent bank manifest: coords and tensors disagree");
    LatentBank bank(file.header.at("d_model").get<std::size_t>(),
                    source_meta_from_json(file.header.value("source_meta", nlohmann::json::object())));
    for (std::size_t i = 0; i < coords.size(); ++i)
      bank.insert({coords[i].at(0).get<std::size_t>(), coords[i].at(1).get<std::size_t>()},
                  std::move(file.tensors[i].tensor.data));
    return bank;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("latent bank manifest: ") + e.what());
  }
}

}  // namespace latentpatch
