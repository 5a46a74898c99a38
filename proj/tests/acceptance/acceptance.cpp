// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "latentpatch/cli.hpp"
#include "latentpatch/dataset.hpp"
#include "latentpatch/error.hpp"
#include "latentpatch/experiments.hpp"
#include "latentpatch/intervention.hpp"
#include "latentpatch/measurement.hpp"
#include "latentpatch/oracle.hpp"
#include "../support.hpp"

using namespace latentpatch;
using namespace latentpatch::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// The default toy architecture at the standard init scale.
const Transformer& toy() {
  static const Transformer t = random_transformer(ModelSpec{}, 2024);
  return t;
}

double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return m;
}

const SyntheticSuite& suite() {
  static const SyntheticSuite s = make_synthetic_suite();
  return s;
}

const OracleModel& oracle(Hypothesis mode) {
  static const auto make = [](Hypothesis m) {
    OracleSpec spec;
    spec.mode = m;
    return OracleModel(spec, suite().lexicon, suite().vocab);
  };
  static const OracleModel h1 = make(Hypothesis::H1);
  static const OracleModel h2 = make(Hypothesis::H2);
  return mode == Hypothesis::H1 ? h1 : h2;
}

ExperimentConfig base_config() {
  ExperimentConfig c;
  c.n_pairs = 64;
  c.k = 5;
  c.seed = 0;
  return c;
}

Outcome identity_noop() {
  const auto t0 = Clock::now();
  const auto& m = toy();
  Rng rng(1);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const auto len = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto tokens = random_tokens(rng, len, m.vocab_size());
    const auto base = m.forward(tokens);
    const auto layer = std::uniform_int_distribution<std::size_t>(0, m.n_layers())(rng);
    const auto pos = std::uniform_int_distribution<std::size_t>(0, len - 1)(rng);
    PatchPlan plan;
    const auto s = base.state(layer, pos);
    plan.add(layer, pos, {s.begin(), s.end()});
    worst = std::max(worst, max_abs_diff(m.forward(tokens, plan).final_distribution,
                                         base.final_distribution));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 10.0, fmt("max |dP| = %.3g over 100 patches in %.2f s", worst, secs)};
}

Outcome full_override() {
  const auto& m = toy();
  Rng rng(2);
  double worst = 0.0;
  int distinct = 0;
  for (int n = 0; n < 20; ++n) {
    const auto ls = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto lt = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto s = random_tokens(rng, ls, m.vocab_size());
    const auto t = random_tokens(rng, lt, m.vocab_size());
    const auto src = m.forward(s);
    const std::size_t pos[] = {ls - 1};
    const auto bank = extract_latents(src, pos, all_layers(m.n_layers()));
    const auto out = m.forward(t, span_plan(bank, 0, m.n_layers(), ls - 1, lt - 1));
    worst = std::max(worst, max_abs_diff(out.final_distribution, src.final_distribution));
    distinct += max_abs_diff(m.forward(t).final_distribution, src.final_distribution) > 1e-6;
  }
  return {worst < 1e-6 && distinct > 0,
          fmt("max |dP| = %.3g over 20 pairs (%.0f with distinct baselines)", worst, distinct)};
}

Outcome locality() {
  const auto& m = toy();
  Rng rng(3);
  std::size_t violations = 0, changed = 0;
  for (int n = 0; n < 50; ++n) {
    const auto len = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto tokens = random_tokens(rng, len, m.vocab_size());
    const auto base = m.forward(tokens);
    const auto layer = std::uniform_int_distribution<std::size_t>(0, m.n_layers())(rng);
    const auto pos = std::uniform_int_distribution<std::size_t>(0, len - 1)(rng);
    PatchPlan plan;
    plan.add(layer, pos, random_vector(rng, m.d_model()));
    const auto patched = m.forward(tokens, plan);
    for (std::size_t j = 0; j <= m.n_layers(); ++j)
      for (std::size_t i = 0; i < len; ++i) {
        const auto a = base.state(j, i), b = patched.state(j, i);
        const bool same = std::equal(a.begin(), a.end(), b.begin());
        if ((j < layer || i < pos) && !same) ++violations;
        if (j >= layer && i >= pos && !same) ++changed;
      }
  }
  return {violations == 0 && changed > 0,
          fmt("%.0f states changed upstream of a patch (%.0f downstream changes)",
              double(violations), double(changed))};
}

Outcome residual_update() {
  const auto& m = toy();
  Rng rng(4);
  double worst = 0.0;
  for (int n = 0; n < 10; ++n) {
    const auto len = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto tokens = random_tokens(rng, len, m.vocab_size());
    const auto trace = m.forward(tokens);
    for (std::size_t j = 1; j <= m.n_layers(); ++j)
      for (std::size_t i = 0; i < len; ++i) {
        const auto f = m.layer_update(j, trace.layer(j - 1), i);
        const auto now = trace.state(j, i), before = trace.state(j - 1, i);
        for (std::size_t k = 0; k < m.d_model(); ++k)
          worst = std::max(worst, std::abs(double(now[k]) - before[k] - f[k]));
      }
  }
  return {worst < 1e-5, fmt("max residual mismatch %.3g over 10 prompts", worst)};
}

std::string dominant(const LayerSweepResult& r, std::size_t j) {
  std::string best;
  double p = -1.0;
  for (const auto& label : r.labels)
    if (r.series.at(label)[j].mean > p) {
      p = r.series.at(label)[j].mean;
      best = label;
    }
  return best;
}

Outcome exp1_regimes() {
  const auto& m = oracle(Hypothesis::H1);
  const auto cfg = base_config();
  Rng rng(cfg.seed);
  const auto pairs = build_pairs(cfg, suite().lexicon, suite().vocab, rng);
  const auto r = run_exp1(m, pairs, cfg);
  const auto want = expected_regimes(m.spec(), ExperimentKind::exp1);
  bool ok = true;
  double low = 1.0;
  for (std::size_t j = 0; j < want.size(); ++j) {
    const auto d = dominant(r, j);
    low = std::min(low, r.series.at(d)[j].mean);
    ok = ok && d == want[j] && r.series.at(d)[j].mean > 0.8;
  }
  return {ok, std::string(ok ? "regimes match" : "regimes differ") +
                  fmt("; lowest dominant mean %.3f", low)};
}

Outcome exp2_regimes() {
  const auto& m = oracle(Hypothesis::H1);
  const auto cfg = base_config();
  Rng rng(cfg.seed);
  const auto pairs = build_pairs(cfg, suite().lexicon, suite().vocab, rng);
  const auto r = run_exp2(m, pairs, cfg);
  const std::size_t jr = m.spec().j_read;
  double before = 1.0, after = 1.0;
  for (std::size_t j = 0; j <= m.n_layers(); ++j) {
    if (j < jr)
      before = std::min(before, r.series.at(kSrcTgt)[j].mean);
    else
      after = std::min(after, r.series.at(kTgtTgt)[j].mean);
  }
  return {before > 0.8 && after > 0.8,
          fmt("min src/tgt below j_read %.3f, min tgt/tgt from j_read %.3f", before, after)};
}

struct MeanVsSingle {
  LayerSweepResult mean, single;
};

MeanVsSingle mean_vs_single(Hypothesis mode, GroupKind kind, std::uint64_t seed) {
  auto cfg = base_config();
  cfg.seed = seed;
  Rng rng(cfg.seed);
  const auto groups = build_groups(kind, cfg, suite().lexicon, suite().vocab, rng);
  const auto& m = oracle(mode);
  auto mean = kind == GroupKind::language_pairs ? run_exp3(m, groups, cfg)
                                                : run_context_mean(m, groups, cfg);
  return {std::move(mean), run_single_sources(m, groups, cfg)};
}

Outcome h1_h2_separation() {
  const auto t0 = Clock::now();
  const std::size_t jr = OracleSpec{}.j_read;
  const auto h1 = mean_vs_single(Hypothesis::H1, GroupKind::language_pairs, 0);
  const auto h2 = mean_vs_single(Hypothesis::H2, GroupKind::language_pairs, 0);
  bool ok = true;
  std::size_t denoised = 0;
  double worst_ratio = 0.0;
  for (std::size_t j = 0; j < jr; ++j) {
    const double m1 = h1.mean.series.at(kSrcTgt)[j].mean;
    const double s1 = h1.single.series.at(kSrcTgt)[j].mean;
    ok = ok && m1 >= s1;
    denoised += m1 >= s1 + 0.02;
    const double m2 = h2.mean.series.at(kSrcTgt)[j].mean;
    const double s2 = h2.single.series.at(kSrcTgt)[j].mean;
    ok = ok && m2 <= 0.5 * s2;
    worst_ratio = std::max(worst_ratio, s2 > 0 ? m2 / s2 : 1.0);
  }
  ok = ok && 2 * denoised >= jr;
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, fmt("H1 denoised at %.0f of %.0f layers; H2 worst mean/single ratio %.3f",
                  double(denoised), double(jr), worst_ratio) +
                  fmt("; %.1f s", secs)};
}

Outcome context_mean() {
  const std::size_t jr = OracleSpec{}.j_read;
  const auto lp = mean_vs_single(Hypothesis::H1, GroupKind::language_pairs, 0);
  const auto ctx = mean_vs_single(Hypothesis::H1, GroupKind::contexts, 0);
  bool ok = true;
  double margin = 1.0;
  for (std::size_t j = 0; j < jr; ++j) {
    const double gain_lp = lp.mean.series.at(kSrcTgt)[j].mean - lp.single.series.at(kSrcTgt)[j].mean;
    const double gain_ctx =
        ctx.mean.series.at(kSrcTgt)[j].mean - ctx.single.series.at(kSrcTgt)[j].mean;
    ok = ok && gain_ctx < gain_lp;
    margin = std::min(margin, gain_lp - gain_ctx);
  }
  return {ok, fmt("smallest gain advantage of language-pair mean %.4f", margin)};
}

Outcome controls() {
  const auto& m = oracle(Hypothesis::H1);
  const auto cfg = base_config();
  Rng rng(cfg.seed);
  const auto tpl = build_control_items(ControlVariant::random_template, cfg, suite().lexicon,
                                       suite().vocab, rng);
  const auto shuf =
      build_control_items(ControlVariant::shuffled, cfg, suite().lexicon, suite().vocab, rng);
  const auto r_tpl = run_controls(m, tpl, ControlVariant::random_template, cfg);
  const auto r_shuf = run_controls(m, shuf, ControlVariant::shuffled, cfg);
  double gap = 0.0, top = 0.0;
  const double base = r_tpl.baselines.at("target_accuracy");
  for (std::size_t j = 0; j < m.spec().j_lang; ++j)
    gap = std::max(gap, std::abs(r_tpl.accuracy.at(kTgtTgt)[j].mean - base));
  for (std::size_t j = 1; j <= m.n_layers(); ++j)
    top = std::max(top, r_shuf.series.at(kTgtTgt)[j].mean);
  return {gap <= 0.05 && top < 0.1,
          fmt("random-template accuracy gap %.3f; shuffled max P %.4f", gap, top)};
}

Outcome statistics() {
  const std::vector<double> xs = {0, 1, 0, 1};
  const auto a = aggregate(xs);
  const double half = (a.ci_high - a.ci_low) / 2.0;
  const double want = 1.96 * 0.5773503 / 2.0;
  bool ok = std::abs(half - want) < 1e-6;
  Rng rng(10);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const auto v = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    std::vector<float> logits = random_vector(rng, v, 3.0f), dist(v);
    float mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t i = 0; i < v; ++i) z += std::exp(double(logits[i]) - mx);
    for (std::size_t i = 0; i < v; ++i) dist[i] = float(std::exp(double(logits[i]) - mx) / z);
    double total = 0.0;
    for (float p : dist) total += p;
    for (auto& p : dist) p = float(p / total);
    std::set<TokenId> set;
    const auto count = std::uniform_int_distribution<std::size_t>(1, v)(rng);
    while (set.size() < count)
      set.insert(std::uniform_int_distribution<TokenId>(0, TokenId(v - 1))(rng));
    double brute = 0.0;
    for (TokenId t = 0; t < v; ++t)
      if (set.count(t)) brute += dist[t];
    try {
      worst = std::max(worst, std::abs(concept_probability(dist, set) - brute));
    } catch (const Error&) {
      worst = 1.0;  // rejected a valid distribution
    }
  }
  ok = ok && worst < 1e-9;
  return {ok, fmt("half-width %.9f (want %.9f); brute-force max diff %.3g", half, want, worst)};
}

Outcome disjointness() {
  std::size_t bad = 0, emitted = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    auto cfg = base_config();
    cfg.n_pairs = 4;
    cfg.n_shots = 1;
    Rng rng(seed);
    for (const auto& p : build_pairs(cfg, suite().lexicon, suite().vocab, rng)) {
      ++emitted;
      bad += !validate_disjoint(p.tracked).ok();
    }
  }
  const auto v = en_fr_vocab();
  const ConceptLexicon colliding({{"en", "English"}, {"fr", "Français"}},
                                 {{"CAT", {{"en", {"cat"}}, {"fr", {"chat"}}}},
                                  {"KITTEN", {{"en", {"cat"}}, {"fr", {"chat"}}}},
                                  {"DOG", {{"en", {"dog"}}, {"fr", {"chien"}}}}});
  std::string message;
  try {
    auto cfg = base_config();
    cfg.n_pairs = 200;
    cfg.n_shots = 0;
    cfg.max_attempts = 500;
    Rng rng(1);
    const auto pairs = build_pairs(cfg, colliding, v, rng);
    bool clean = true;
    for (const auto& p : pairs) clean = clean && validate_disjoint(p.tracked).ok();
    if (!clean) message = "(colliding pair emitted)";
  } catch (const Error& e) {
    message = e.what();
  }
  const auto report = validate_lexicon(colliding, v);
  const auto lines = describe(report.disjointness, v);
  const bool named = !lines.empty() && lines.front().find("'cat'") != std::string::npos;
  const bool ok = bad == 0 && emitted == 2000 && named &&
                  message.find("(colliding") == std::string::npos;
  return {ok, fmt("%.0f of %.0f pairs overlapped; ", double(bad), double(emitted)) +
                  (named ? lines.front() : std::string("collision not named"))};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  TempDir dir("acceptance");
  {
    std::ofstream f(dir.path() / "config.json");
    f << R"({"n_pairs": 16, "seed": 5, "k": 3, "synthetic": {},
             "control_variants": ["random_template", "shuffled"],
             "model": {"kind": "oracle", "oracle": {"mode": "H1"}}})";
  }
  const std::vector<std::string> commands = {"run-exp1",         "run-exp2",       "run-exp3",
                                             "run-context-mean", "run-patchscope", "run-controls"};
  std::size_t same = 0;
  std::string failed;
  for (const auto& cmd : commands) {
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const auto out = dir.path() / (cmd + std::to_string(run));
      const std::string threads = run == 0 ? "1" : "4";
      const std::string cfg = (dir.path() / "config.json").string(), o = out.string();
      const char* argv[] = {"latentpatch", cmd.c_str(), "--config", cfg.c_str(),
                            "--out", o.c_str(), "--threads", threads.c_str()};
      std::ostringstream sout, serr;
      if (run_cli(8, argv, sout, serr) != 0) {
        failed += " " + cmd + ": " + serr.str();
        break;
      }
      for (const auto& e : std::filesystem::directory_iterator(out))
        if (e.path().extension() == ".csv") outputs[run] += slurp(e.path());
    }
    if (!outputs[0].empty() && outputs[0] == outputs[1]) ++same;
  }
  return {same == commands.size(),
          fmt("%.0f of %.0f run-* subcommands byte-identical (threads 1 vs 4)", double(same),
              double(commands.size())) +
              failed};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"patch identity is a no-op", identity_noop},
      {"full override reproduces the source", full_override},
      {"patches are causal and local", locality},
      {"residual update matches the layer hook", residual_update},
      {"exp1 regimes on the H1 oracle", exp1_regimes},
      {"exp2 regimes on the H1 oracle", exp2_regimes},
      {"mean patching separates H1 from H2", h1_h2_separation},
      {"context mean does not denoise", context_mean},
      {"control prompts", controls},
      {"statistics", statistics},
      {"tracked sets stay disjoint", disjointness},
      {"run output is deterministic", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first
              << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
