#include "latentpatch/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "latentpatch/dataset.hpp"
#include "latentpatch/error.hpp"
#include "latentpatch/oracle.hpp"
#include "latentpatch/report.hpp"
#include "latentpatch/synthetic.hpp"
#include "latentpatch/transformer.hpp"
#include "latentpatch/weights.hpp"

namespace latentpatch {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("'" + path.string() + "': " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

std::string output_name(Protocol p) { return to_string(p); }

}  // namespace

Workspace load_workspace(const ExperimentConfig& config, const fs::path& base_dir) {
  Workspace ws;
  if (config.synthetic) {
    auto suite = make_synthetic_suite(*config.synthetic);
    ws.vocab = std::make_unique<Vocab>(std::move(suite.vocab));
    ws.lexicon = std::make_unique<ConceptLexicon>(std::move(suite.lexicon));
  } else {
    ws.vocab = std::make_unique<Vocab>(Vocab::load(resolve(base_dir, config.vocab)));
    ws.lexicon =
        std::make_unique<ConceptLexicon>(ConceptLexicon::load(resolve(base_dir, config.lexicon)));
  }
  if (config.model.kind == "transformer") {
    auto t = Transformer::load(resolve(base_dir, config.model.path));
    if (t.vocab_size() != ws.vocab->size())
      throw Error("model vocab_size " + std::to_string(t.vocab_size()) + " does not match the " +
                  std::to_string(ws.vocab->size()) + "-token vocab");
    ws.model = std::make_unique<Transformer>(std::move(t));
  } else {
    OracleSpec spec;
    if (config.model.oracle)
      spec = *config.model.oracle;
    else if (!config.model.path.empty())
      spec = oracle_spec_from_json(read_json(resolve(base_dir, config.model.path)));
    ws.model = std::make_unique<OracleModel>(spec, *ws.lexicon, *ws.vocab);
  }
  return ws;
}

std::vector<LayerSweepResult> run_protocol(const ExperimentConfig& config, const Workspace& ws,
                                           bool with_single) {
  config.validate();
  Rng rng(config.seed);
  const auto& model = *ws.model;
  const auto& lex = *ws.lexicon;
  const auto& vocab = *ws.vocab;
  std::vector<LayerSweepResult> out;
  switch (config.protocol) {
    case Protocol::exp1:
      out.push_back(run_exp1(model, build_pairs(config, lex, vocab, rng), config));
      break;
    case Protocol::exp2:
      out.push_back(run_exp2(model, build_pairs(config, lex, vocab, rng), config));
      break;
    case Protocol::exp3:
    case Protocol::context_mean: {
      const bool exp3 = config.protocol == Protocol::exp3;
      const auto groups = build_groups(exp3 ? GroupKind::language_pairs : GroupKind::contexts,
                                       config, lex, vocab, rng);
      out.push_back(exp3 ? run_exp3(model, groups, config)
                         : run_context_mean(model, groups, config));
      if (with_single) out.push_back(run_single_sources(model, groups, config));
      break;
    }
    case Protocol::patchscope:
      out.push_back(run_patchscope(model, build_pairs(config, lex, vocab, rng),
                                   build_identity_prompt(vocab), config));
      break;
    case Protocol::controls:
      for (auto v : config.control_variants)
        out.push_back(run_controls(model, build_control_items(v, config, lex, vocab, rng), v, config));
      break;
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual-stream patching experiments on toy transformers and oracle models",
               "latentpatch"};
  app.set_version_flag("--version", std::string(LATENTPATCH_VERSION));
  app.require_subcommand(1);

  // make-oracle
  std::string oracle_out;
  std::string oracle_mode = "H1";
  SyntheticConfig suite_cfg;
  OracleSpec oracle_spec;
  auto* make_oracle = app.add_subcommand("make-oracle", "Write a synthetic vocab, lexicon and oracle spec");
  make_oracle->add_option("--out", oracle_out, "Output directory")->required();
  make_oracle->add_option("--mode", oracle_mode, "H1 or H2")->check(CLI::IsMember({"H1", "H2"}));
  make_oracle->add_option("--seed", suite_cfg.seed, "Seed for the suite and the oracle basis");
  make_oracle->add_option("--languages", suite_cfg.n_languages, "Number of synthetic languages");
  make_oracle->add_option("--concepts", suite_cfg.n_concepts, "Number of concepts");
  make_oracle->add_option("--layers", oracle_spec.n_layers, "Oracle layer count");
  make_oracle->add_option("--j-marker", oracle_spec.j_marker, "Layer writing the slot marker");
  make_oracle->add_option("--j-lang", oracle_spec.j_lang, "Layer writing the output language");
  make_oracle->add_option("--j-read", oracle_spec.j_read, "Layer reading the concept");

  // make-toy-model
  std::string toy_out, toy_vocab;
  ModelSpec toy_spec;
  std::uint64_t toy_seed = 0;
  auto* make_toy = app.add_subcommand("make-toy-model", "Write a seeded random-weight transformer");
  make_toy->add_option("--out", toy_out, "Output stem (writes <stem>.manifest.json and <stem>.bin)")
      ->required();
  make_toy->add_option("--vocab", toy_vocab, "Vocab file; sets vocab_size");
  make_toy->add_option("--seed", toy_seed, "Weight seed");
  make_toy->add_option("--layers", toy_spec.n_layers, "Layer count");
  make_toy->add_option("--d-model", toy_spec.d_model, "Residual width");
  make_toy->add_option("--heads", toy_spec.n_heads, "Attention heads");
  make_toy->add_option("--d-ff", toy_spec.d_ff, "MLP width");

  // validate-lexicon
  std::string val_lexicon, val_vocab;
  std::vector<std::string> val_languages;
  auto* validate = app.add_subcommand("validate-lexicon", "Check lexicon coverage and first-token disjointness");
  validate->add_option("--lexicon", val_lexicon, "Lexicon JSON")->required();
  validate->add_option("--vocab", val_vocab, "Vocab JSON")->required();
  validate->add_option("--languages", val_languages, "Tracked languages (default: all)")
      ->delimiter(',');

  // run-*
  struct RunOpts {
    std::string config, out;
    std::optional<std::size_t> threads, n_pairs;
    std::optional<std::uint64_t> seed;
    bool with_single = false;
  };
  const std::pair<const char*, Protocol> runs[] = {
      {"run-exp1", Protocol::exp1},
      {"run-exp2", Protocol::exp2},
      {"run-exp3", Protocol::exp3},
      {"run-context-mean", Protocol::context_mean},
      {"run-patchscope", Protocol::patchscope},
      {"run-controls", Protocol::controls},
  };
  RunOpts run_opts;
  std::vector<std::pair<CLI::App*, Protocol>> run_cmds;
  for (const auto& [name, protocol] : runs) {
    auto* sub = app.add_subcommand(name, "Run the " + to_string(protocol) + " protocol");
    sub->add_option("--config", run_opts.config, "Experiment config JSON")->required();
    sub->add_option("--out", run_opts.out, "Output directory")->required();
    sub->add_option("--threads", run_opts.threads, "Worker threads (output does not depend on it)");
    sub->add_option("--seed", run_opts.seed, "Override the config seed");
    sub->add_option("--n-pairs", run_opts.n_pairs, "Override the config n_pairs");
    if (protocol == Protocol::exp3 || protocol == Protocol::context_mean)
      sub->add_flag("--with-single", run_opts.with_single,
                    "Also emit the averaged single-source reference");
    run_cmds.emplace_back(sub, protocol);
  }

  // emit-plot-data
  std::string plot_in, plot_out;
  auto* plot = app.add_subcommand("emit-plot-data", "Convert a results CSV to long-format plot data");
  plot->add_option("--in", plot_in, "Results CSV")->required();
  plot->add_option("--out", plot_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (make_oracle->parsed()) {
      const fs::path dir(oracle_out);
      fs::create_directories(dir);
      oracle_spec.mode = hypothesis_from_string(oracle_mode);
      oracle_spec.seed = suite_cfg.seed;
      oracle_spec.validate();
      const auto suite = make_synthetic_suite(suite_cfg);
      OracleModel check(oracle_spec, suite.lexicon, suite.vocab);
      suite.vocab.save(dir / "vocab.json");
      suite.lexicon.save(dir / "lexicon.json");
      write_json(dir / "oracle.json", to_json(oracle_spec));
      out << "wrote " << (dir / "vocab.json").string() << " (" << suite.vocab.size()
          << " tokens), " << (dir / "lexicon.json").string() << ", "
          << (dir / "oracle.json").string() << " (d_model " << check.d_model() << ")\n";
      return 0;
    }
    if (make_toy->parsed()) {
      if (!toy_vocab.empty()) toy_spec.vocab_size = Vocab::load(toy_vocab).size();
      toy_spec.validate();
      save_model(toy_spec, random_weights(toy_spec, toy_seed), toy_out);
      out << "wrote " << manifest_path(toy_out).string() << " and " << blob_path(toy_out).string()
          << '\n';
      return 0;
    }
    if (validate->parsed()) {
      const auto vocab = Vocab::load(val_vocab);
      const auto lexicon = ConceptLexicon::load(val_lexicon);
      const auto report = validate_lexicon(lexicon, vocab, val_languages);
      for (const auto& p : report.coverage_problems) err << "coverage: " << p << '\n';
      for (const auto& v : describe(report.disjointness, vocab)) err << "overlap: " << v << '\n';
      if (!report.ok()) {
        err << "lexicon invalid: " << report.coverage_problems.size() << " coverage problem(s), "
            << report.disjointness.violations.size() << " overlapping token(s)\n";
        return 1;
      }
      out << "lexicon ok: " << lexicon.concepts().size() << " concepts, "
          << lexicon.languages().size() << " languages\n";
      return 0;
    }
    for (const auto& [sub, protocol] : run_cmds) {
      if (!sub->parsed()) continue;
      const fs::path config_path(run_opts.config);
      auto config = load_experiment_config(config_path);
      config.protocol = protocol;
      if (run_opts.threads) config.threads = *run_opts.threads;
      if (run_opts.seed) config.seed = *run_opts.seed;
      if (run_opts.n_pairs) config.n_pairs = *run_opts.n_pairs;
      config.validate();
      const auto ws = load_workspace(config, config_path.parent_path());
      const auto results = run_protocol(config, ws, run_opts.with_single);
      const fs::path dir(run_opts.out);
      const auto name = output_name(protocol);
      write_results(results, dir / (name + ".csv"));
      // Thread count is an execution detail, not part of the experiment.
      auto echo = to_json(config);
      echo.erase("threads");
      write_sidecar(results, echo, dir / (name + ".json"));
      for (const auto& r : results)
        if (!r.regime_claims_allowed)
          err << "warning: " << r.experiment
              << " baselines below the floor; regime claims are not supported\n";
      out << "wrote " << (dir / (name + ".csv")).string() << " and "
          << (dir / (name + ".json")).string() << '\n';
      return 0;
    }
    if (plot->parsed()) {
      const auto results = read_results(plot_in);
      const fs::path path(plot_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cannot open '" + plot_out + "' for writing");
      f << plot_data(results);
      out << "wrote " << plot_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace latentpatch
