#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/config.hpp"
#include "latentpatch/dataset.hpp"
#include "latentpatch/measurement.hpp"
#include "latentpatch/trace.hpp"

namespace latentpatch {

/// Per-layer aggregates (layers 0..L) for each tracked label, in `labels`
/// order. `series` holds probabilities, `accuracy` argmax accuracies.
struct LayerSweepResult {
  std::string experiment;
  std::vector<std::string> labels;
  std::map<std::string, std::vector<Aggregate>> series;
  std::map<std::string, std::vector<Aggregate>> accuracy;
  std::map<std::string, double> baselines;
  bool regime_claims_allowed = true;
  nlohmann::json config;
};

/// Single-layer patch of the source's last-token latent into the target's
/// last token.
LayerSweepResult run_exp1(const ResidualModel& model, std::span<const PromptPair> pairs,
                          const ExperimentConfig& config);

/// Span patch of the source word latent (rho_S) into rho_T at layers j..L.
LayerSweepResult run_exp2(const ResidualModel& model, std::span<const PromptPair> pairs,
                          const ExperimentConfig& config);

/// Span patch of the mean over each group's sources into rho_T at layers j..L.
LayerSweepResult run_exp3(const ResidualModel& model, std::span<const PromptGroup> groups,
                          const ExperimentConfig& config);

/// run_exp3 over groups that share one language pair and differ in shots.
LayerSweepResult run_context_mean(const ResidualModel& model, std::span<const PromptGroup> groups,
                                  const ExperimentConfig& config);

/// The reference for mean patching: each source span-patched on its own,
/// probabilities averaged over the group's sources.
LayerSweepResult run_single_sources(const ResidualModel& model,
                                    std::span<const PromptGroup> groups,
                                    const ExperimentConfig& config,
                                    const std::string& experiment = "single-source");

/// Source last-token latent decoded by patching it into the identity prompt.
/// Single-layer unless config.patchscope_span.
LayerSweepResult run_patchscope(const ResidualModel& model, std::span<const PromptPair> pairs,
                                const IdentityPrompt& identity, const ExperimentConfig& config);

/// Exp-1 mechanics with control sources; only the target concept in the
/// target language is tracked.
LayerSweepResult run_controls(const ResidualModel& model, std::span<const ControlItem> items,
                              ControlVariant variant, const ExperimentConfig& config);

}  // namespace latentpatch
