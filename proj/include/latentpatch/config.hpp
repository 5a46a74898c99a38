#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/oracle.hpp"
#include "latentpatch/prompts.hpp"
#include "latentpatch/synthetic.hpp"

namespace latentpatch {

enum class Protocol { exp1, exp2, exp3, context_mean, patchscope, controls };

std::string to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);

using LangPair = std::pair<std::string, std::string>;  // (input, output)

/// Where the model comes from: an oracle spec (inline or a file) or a
/// transformer weight manifest.
struct ModelRef {
  std::string kind = "oracle";  // "oracle" | "transformer"
  std::string path;
  std::optional<OracleSpec> oracle;

  friend bool operator==(const ModelRef&, const ModelRef&) = default;
};

struct ExperimentConfig {
  Protocol protocol = Protocol::exp1;
  std::vector<LangPair> source_pairs;  // empty: every ordered pair of distinct languages
  std::optional<LangPair> target_pair; // unset: drawn per item
  std::size_t n_shots = 5;
  std::size_t n_pairs = 64;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double baseline_floor = 0.5;
  bool patchscope_span = false;
  std::vector<ControlVariant> control_variants = all_control_variants();
  std::size_t max_attempts = 10000;  // rejected candidates before giving up
  std::string vocab;                 // paths; empty with `synthetic` set
  std::string lexicon;
  std::optional<SyntheticConfig> synthetic;
  ModelRef model;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace latentpatch
