#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/patch_plan.hpp"
#include "latentpatch/trace.hpp"
#include "latentpatch/types.hpp"

namespace latentpatch {

struct SourceMeta {
  std::string prompt_id;
  std::string concept_id;
  std::string lang_in;
  std::string lang_out;

  friend bool operator==(const SourceMeta&, const SourceMeta&) = default;
};

nlohmann::json to_json(const SourceMeta& meta);
SourceMeta source_meta_from_json(const nlohmann::json& j);

/// Residual vectors copied out of a source run, keyed by (layer, position).
/// Banks own their data so later runs can never alias a trace.
class LatentBank {
 public:
  explicit LatentBank(std::size_t d_model, SourceMeta meta = {});

  void insert(Coord at, std::vector<float> value);
  bool contains(Coord at) const { return entries_.contains(at); }
  const std::vector<float>& at(Coord at) const;

  std::set<std::size_t> layers() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t d_model() const { return d_model_; }
  const SourceMeta& meta() const { return meta_; }
  const std::map<Coord, std::vector<float>>& entries() const { return entries_; }

  friend bool operator==(const LatentBank&, const LatentBank&) = default;

 private:
  std::size_t d_model_;
  SourceMeta meta_;
  std::map<Coord, std::vector<float>> entries_;
};

/// Layers 0..n_layers inclusive.
std::vector<std::size_t> all_layers(std::size_t n_layers);

LatentBank extract_latents(const ActivationTrace& trace, std::span<const std::size_t> positions,
                           std::span<const std::size_t> layers, SourceMeta meta = {});

/// Runs the unpatched source prompt and copies the requested coordinates.
LatentBank extract_latents(const ResidualModel& model, std::span<const TokenId> prompt,
                           std::span<const std::size_t> positions,
                           std::span<const std::size_t> layers, SourceMeta meta = {});

/// h^(j)_{tgt}(T) := h^(j)_{src}(S).
PatchPlan single_layer_plan(const LatentBank& bank, std::size_t layer, std::size_t src_pos,
                            std::size_t tgt_pos);

/// h^(a)_{tgt}(T) := h^(a)_{src}(S) for every a in layer_start..n_layers.
PatchPlan span_plan(const LatentBank& bank, std::size_t layer_start, std::size_t n_layers,
                    std::size_t src_pos, std::size_t tgt_pos);

/// Per-layer arithmetic mean over k banks, bank i read at its own
/// source_positions[i]. The result is keyed at `result_position`. Sums are
/// accumulated in double and rounded once.
LatentBank mean_banks(std::span<const LatentBank> banks,
                      std::span<const std::size_t> source_positions,
                      std::size_t result_position);

/// Same manifest + blob format as model weights, source meta in the manifest.
void save_bank(const LatentBank& bank, const std::filesystem::path& stem);
LatentBank load_bank(const std::filesystem::path& stem);

}  // namespace latentpatch
