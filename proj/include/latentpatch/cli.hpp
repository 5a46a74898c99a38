#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

#include "latentpatch/config.hpp"
#include "latentpatch/experiments.hpp"
#include "latentpatch/lexicon.hpp"
#include "latentpatch/trace.hpp"
#include "latentpatch/vocab.hpp"

namespace latentpatch {

/// Vocab, lexicon and model named by a config. Relative paths resolve
/// against base_dir.
struct Workspace {
  std::unique_ptr<Vocab> vocab;
  std::unique_ptr<ConceptLexicon> lexicon;
  std::unique_ptr<ResidualModel> model;
};

Workspace load_workspace(const ExperimentConfig& config, const std::filesystem::path& base_dir);

/// Builds the dataset for config.protocol from config.seed and runs it.
/// Controls yield one result per variant; exp3 and context-mean append the
/// single-source reference when `with_single` is set.
std::vector<LayerSweepResult> run_protocol(const ExperimentConfig& config, const Workspace& ws,
                                           bool with_single = false);

/// The latentpatch command line. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace latentpatch
