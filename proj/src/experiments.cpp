#include "latentpatch/experiments.hpp"

#include <exception>
#include <functional>
#include <thread>

#include "latentpatch/error.hpp"
#include "latentpatch/intervention.hpp"

namespace latentpatch {

namespace {

/// Everything one work item contributes: per layer, per label.
struct ItemResult {
  std::vector<std::vector<double>> prob;
  std::vector<std::vector<double>> acc;
  std::map<std::string, double> baselines;
};

using ItemFn = std::function<ItemResult(std::size_t)>;

std::vector<ItemResult> run_items(std::size_t n_items, std::size_t threads, const ItemFn& fn) {
  std::vector<ItemResult> results(n_items);
  const std::size_t workers = std::min(threads, n_items);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_items; ++i) results[i] = fn(i);
    return results;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n_items; i += workers) results[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

/// Reduces item results in index order so parallelism cannot change output.
LayerSweepResult reduce(std::string experiment, std::vector<std::string> labels,
                        std::size_t n_layers, const std::vector<ItemResult>& items,
                        const ExperimentConfig& config) {
  if (items.empty()) throw Error(experiment + ": empty dataset");
  LayerSweepResult r;
  r.experiment = std::move(experiment);
  r.labels = std::move(labels);
  for (std::size_t s = 0; s < r.labels.size(); ++s) {
    auto& prob = r.series[r.labels[s]];
    auto& acc = r.accuracy[r.labels[s]];
    for (std::size_t j = 0; j <= n_layers; ++j) {
      std::vector<double> p, a;
      for (const auto& it : items) {
        p.push_back(it.prob[j][s]);
        a.push_back(it.acc[j][s]);
      }
      prob.push_back(aggregate(p));
      acc.push_back(aggregate(a));
    }
  }
  for (const auto& [name, _] : items.front().baselines) {
    double sum = 0.0;
    for (const auto& it : items) sum += it.baselines.at(name);
    r.baselines[name] = sum / static_cast<double>(items.size());
  }
  for (const auto& [name, value] : r.baselines)
    if (name.ends_with("accuracy") && value < config.baseline_floor) r.regime_claims_allowed = false;
  r.config = to_json(config);
  return r;
}

std::vector<std::string> labels_of(const TrackedSets& sets) {
  std::vector<std::string> out;
  for (const auto& s : sets) out.push_back(s.label);
  return out;
}

/// Probability and accuracy of every tracked set under one distribution.
void measure(std::span<const float> dist, const TrackedSets& sets, std::vector<double>& prob,
             std::vector<double>& acc) {
  prob.clear();
  acc.clear();
  for (const auto& s : sets) {
    prob.push_back(concept_probability(dist, s.tokens));
    acc.push_back(argmax_accuracy(dist, s.tokens));
  }
}

const TrackedSet& find_set(const TrackedSets& sets, const std::string& label) {
  for (const auto& s : sets)
    if (s.label == label) return s;
  throw Error("tracked set '" + label + "' missing");
}

ItemResult empty_item(std::size_t n_layers) {
  ItemResult r;
  r.prob.resize(n_layers + 1);
  r.acc.resize(n_layers + 1);
  return r;
}

enum class PairMode { last_token_single, word_span };

LayerSweepResult run_pairs(const ResidualModel& model, std::span<const PromptPair> pairs,
                           const ExperimentConfig& config, PairMode mode, std::string name) {
  const std::size_t L = model.n_layers();
  const auto layers = all_layers(L);
  auto item = [&](std::size_t idx) {
    const auto& p = pairs[idx];
    ItemResult r = empty_item(L);
    const auto src = model.forward(p.source.tokens);
    const auto tgt = model.forward(p.target.tokens);
    const std::size_t src_pos = mode == PairMode::last_token_single ? p.source.n : p.source.rho;
    const std::size_t tgt_pos = mode == PairMode::last_token_single ? p.target.n : p.target.rho;
    const std::size_t positions[] = {src_pos};
    const auto bank = extract_latents(src, positions, layers);
    for (std::size_t j = 0; j <= L; ++j) {
      const auto plan = mode == PairMode::last_token_single
                            ? single_layer_plan(bank, j, src_pos, tgt_pos)
                            : span_plan(bank, j, L, src_pos, tgt_pos);
      const auto out = model.forward(p.target.tokens, plan);
      measure(out.final_distribution, p.tracked, r.prob[j], r.acc[j]);
    }
    const auto& ss = find_set(p.tracked, kSrcSrc).tokens;
    const auto& tt = find_set(p.tracked, kTgtTgt).tokens;
    r.baselines["source_accuracy"] = argmax_accuracy(src.final_distribution, ss);
    r.baselines["target_accuracy"] = argmax_accuracy(tgt.final_distribution, tt);
    r.baselines["source_probability"] = concept_probability(src.final_distribution, ss);
    r.baselines["target_probability"] = concept_probability(tgt.final_distribution, tt);
    return r;
  };
  const auto items = run_items(pairs.size(), config.threads, item);
  return reduce(std::move(name), labels_of(pairs.front().tracked), L, items, config);
}

enum class GroupMode { mean, single_average };

LayerSweepResult run_groups(const ResidualModel& model, std::span<const PromptGroup> groups,
                            const ExperimentConfig& config, GroupMode mode, std::string name) {
  if (groups.empty()) throw Error(name + ": empty dataset");
  const std::size_t L = model.n_layers();
  const auto layers = all_layers(L);
  auto item = [&](std::size_t idx) {
    const auto& g = groups[idx];
    ItemResult r = empty_item(L);
    const std::size_t rho_t = g.target.rho;
    std::vector<LatentBank> banks;
    std::vector<std::size_t> rhos;
    double src_acc = 0.0, src_prob = 0.0;
    for (std::size_t s = 0; s < g.sources.size(); ++s) {
      const auto trace = model.forward(g.sources[s].tokens);
      const std::size_t positions[] = {g.sources[s].rho};
      banks.push_back(extract_latents(trace, positions, layers));
      rhos.push_back(g.sources[s].rho);
      src_acc += argmax_accuracy(trace.final_distribution, g.source_answers[s]);
      src_prob += concept_probability(trace.final_distribution, g.source_answers[s]);
    }
    const double k = static_cast<double>(g.sources.size());
    const auto tgt = model.forward(g.target.tokens);
    const auto& tt = find_set(g.tracked, kTgtTgt).tokens;
    r.baselines["source_accuracy"] = src_acc / k;
    r.baselines["source_probability"] = src_prob / k;
    r.baselines["target_accuracy"] = argmax_accuracy(tgt.final_distribution, tt);
    r.baselines["target_probability"] = concept_probability(tgt.final_distribution, tt);

    if (mode == GroupMode::mean) {
      const auto mean = mean_banks(banks, rhos, rho_t);
      for (std::size_t j = 0; j <= L; ++j) {
        const auto out = model.forward(g.target.tokens, span_plan(mean, j, L, rho_t, rho_t));
        measure(out.final_distribution, g.tracked, r.prob[j], r.acc[j]);
      }
      return r;
    }
    std::vector<double> prob, acc;
    for (std::size_t j = 0; j <= L; ++j) {
      r.prob[j].assign(g.tracked.size(), 0.0);
      r.acc[j].assign(g.tracked.size(), 0.0);
      for (std::size_t s = 0; s < banks.size(); ++s) {
        const auto out =
            model.forward(g.target.tokens, span_plan(banks[s], j, L, rhos[s], rho_t));
        measure(out.final_distribution, g.tracked, prob, acc);
        for (std::size_t q = 0; q < prob.size(); ++q) {
          r.prob[j][q] += prob[q] / k;
          r.acc[j][q] += acc[q] / k;
        }
      }
    }
    return r;
  };
  const auto items = run_items(groups.size(), config.threads, item);
  return reduce(std::move(name), labels_of(groups.front().tracked), L, items, config);
}

}  // namespace

LayerSweepResult run_exp1(const ResidualModel& model, std::span<const PromptPair> pairs,
                          const ExperimentConfig& config) {
  if (pairs.empty()) throw Error("exp1: empty dataset");
  return run_pairs(model, pairs, config, PairMode::last_token_single, "exp1");
}

LayerSweepResult run_exp2(const ResidualModel& model, std::span<const PromptPair> pairs,
                          const ExperimentConfig& config) {
  if (pairs.empty()) throw Error("exp2: empty dataset");
  return run_pairs(model, pairs, config, PairMode::word_span, "exp2");
}

LayerSweepResult run_exp3(const ResidualModel& model, std::span<const PromptGroup> groups,
                          const ExperimentConfig& config) {
  return run_groups(model, groups, config, GroupMode::mean, "exp3");
}

LayerSweepResult run_context_mean(const ResidualModel& model, std::span<const PromptGroup> groups,
                                  const ExperimentConfig& config) {
  return run_groups(model, groups, config, GroupMode::mean, "context-mean");
}

LayerSweepResult run_single_sources(const ResidualModel& model,
                                    std::span<const PromptGroup> groups,
                                    const ExperimentConfig& config,
                                    const std::string& experiment) {
  return run_groups(model, groups, config, GroupMode::single_average, experiment);
}

LayerSweepResult run_patchscope(const ResidualModel& model, std::span<const PromptPair> pairs,
                                const IdentityPrompt& identity, const ExperimentConfig& config) {
  if (pairs.empty()) throw Error("patchscope: empty dataset");
  const std::size_t L = model.n_layers();
  const auto layers = all_layers(L);
  auto item = [&](std::size_t idx) {
    const auto& p = pairs[idx];
    ItemResult r = empty_item(L);
    const TrackedSets tracked = {find_set(p.tracked, kSrcSrc)};
    const auto src = model.forward(p.source.tokens);
    const std::size_t positions[] = {p.source.n};
    const auto bank = extract_latents(src, positions, layers);
    for (std::size_t j = 0; j <= L; ++j) {
      const auto plan = config.patchscope_span
                            ? span_plan(bank, j, L, p.source.n, identity.n)
                            : single_layer_plan(bank, j, p.source.n, identity.n);
      const auto out = model.forward(identity.tokens, plan);
      measure(out.final_distribution, tracked, r.prob[j], r.acc[j]);
    }
    r.baselines["source_accuracy"] = argmax_accuracy(src.final_distribution, tracked[0].tokens);
    r.baselines["source_probability"] =
        concept_probability(src.final_distribution, tracked[0].tokens);
    return r;
  };
  const auto items = run_items(pairs.size(), config.threads, item);
  return reduce("patchscope", {kSrcSrc}, L, items, config);
}

LayerSweepResult run_controls(const ResidualModel& model, std::span<const ControlItem> items,
                              ControlVariant variant, const ExperimentConfig& config) {
  const std::string name = "controls-" + to_string(variant);
  if (items.empty()) throw Error(name + ": empty dataset");
  const std::size_t L = model.n_layers();
  const auto layers = all_layers(L);
  auto item = [&](std::size_t idx) {
    const auto& c = items[idx];
    ItemResult r = empty_item(L);
    const auto src = model.forward(c.source.tokens);
    const auto tgt = model.forward(c.target.tokens);
    const std::size_t positions[] = {c.source.n};
    const auto bank = extract_latents(src, positions, layers);
    for (std::size_t j = 0; j <= L; ++j) {
      const auto out =
          model.forward(c.target.tokens, single_layer_plan(bank, j, c.source.n, c.target.n));
      measure(out.final_distribution, c.tracked, r.prob[j], r.acc[j]);
    }
    r.baselines["target_accuracy"] = argmax_accuracy(tgt.final_distribution, c.tracked[0].tokens);
    r.baselines["target_probability"] =
        concept_probability(tgt.final_distribution, c.tracked[0].tokens);
    return r;
  };
  const auto results = run_items(items.size(), config.threads, item);
  return reduce(name, labels_of(items.front().tracked), L, results, config);
}

}  // namespace latentpatch
