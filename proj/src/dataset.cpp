#include "latentpatch/dataset.hpp"

#include <algorithm>

#include "latentpatch/error.hpp"
#include "latentpatch/measurement.hpp"

namespace latentpatch {

namespace {

template <class T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  if (items.empty()) throw Error("nothing to sample from");
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

std::vector<std::string> language_codes(const ConceptLexicon& lexicon) {
  std::vector<std::string> out;
  for (const auto& l : lexicon.languages()) out.push_back(l.code);
  return out;
}

std::vector<LangPair> ordered_pairs(const ConceptLexicon& lexicon) {
  std::vector<LangPair> out;
  for (const auto& a : lexicon.languages())
    for (const auto& b : lexicon.languages())
      if (a.code != b.code) out.emplace_back(a.code, b.code);
  return out;
}

void check_languages(const ConceptLexicon& lexicon, const ExperimentConfig& config) {
  for (const auto& [in, out] : config.source_pairs) {
    lexicon.language(in);
    lexicon.language(out);
  }
  if (config.target_pair) {
    lexicon.language(config.target_pair->first);
    lexicon.language(config.target_pair->second);
  }
}

bool covers(const ConceptLexicon& lexicon, const std::string& c,
            std::initializer_list<std::string_view> langs) {
  return std::all_of(langs.begin(), langs.end(), [&](auto l) { return lexicon.has(c, l); });
}

/// Counts rejected candidates and remembers why the last one failed.
class Rejections {
 public:
  explicit Rejections(std::size_t limit) : limit_(limit) {}

  void reject(std::string why, bool overlap = false) {
    if (overlap) last_overlap_ = why;
    last_ = std::move(why);
    if (++count_ > limit_) {
      std::string msg = "dataset generation exhausted after " + std::to_string(count_) +
                        " rejected candidates; last rejection: " + last_;
      if (!last_overlap_.empty() && last_overlap_ != last_)
        msg += "; last first-token overlap: " + last_overlap_;
      throw Error(msg);
    }
  }

 private:
  std::size_t limit_;
  std::size_t count_ = 0;
  std::string last_;
  std::string last_overlap_;
};

std::optional<std::string> overlap(const TrackedSets& sets, const Vocab& vocab) {
  const auto report = validate_disjoint(sets);
  if (report.ok()) return std::nullopt;
  return describe(report, vocab).front();
}

LangPair draw_target(const ExperimentConfig& config, const std::vector<LangPair>& all, Rng& rng) {
  return config.target_pair ? *config.target_pair : pick(all, rng);
}

}  // namespace

TrackedSets make_tracked_sets(const ConceptLexicon& lexicon, const Vocab& vocab,
                              const std::string& src_concept, const std::string& tgt_concept,
                              const std::string& src_lang, const std::string& tgt_lang) {
  return {
      {kSrcSrc, first_tokens(lexicon, vocab, src_concept, src_lang)},
      {kSrcTgt, first_tokens(lexicon, vocab, src_concept, tgt_lang)},
      {kTgtSrc, first_tokens(lexicon, vocab, tgt_concept, src_lang)},
      {kTgtTgt, first_tokens(lexicon, vocab, tgt_concept, tgt_lang)},
  };
}

std::vector<PromptPair> build_pairs(const ExperimentConfig& config, const ConceptLexicon& lexicon,
                                    const Vocab& vocab, Rng& rng) {
  check_languages(lexicon, config);
  const auto all = ordered_pairs(lexicon);
  const auto& sources = config.source_pairs.empty() ? all : config.source_pairs;
  const auto concepts = lexicon.concepts();
  if (concepts.size() < 2) throw Error("dataset needs at least two concepts");

  Rejections rejections(config.max_attempts);
  std::vector<PromptPair> out;
  while (out.size() < config.n_pairs) {
    const auto [si, so] = pick(sources, rng);
    const auto [ti, to] = draw_target(config, all, rng);
    const auto& cs = pick(concepts, rng);
    const auto& ct = pick(concepts, rng);
    if (si == ti || so == to) {
      rejections.reject("language pairs " + si + "->" + so + " and " + ti + "->" + to +
                        " share a language slot");
      continue;
    }
    if (cs == ct) {
      rejections.reject("source and target concept both " + cs);
      continue;
    }
    if (!covers(lexicon, cs, {si, so, to}) || !covers(lexicon, ct, {ti, to, so})) {
      rejections.reject("lexicon lacks entries for " + cs + " or " + ct);
      continue;
    }
    auto tracked = make_tracked_sets(lexicon, vocab, cs, ct, so, to);
    if (auto why = overlap(tracked, vocab)) {
      rejections.reject(*why, true);
      continue;
    }
    PromptPair p;
    p.source = build_translation_prompt(lexicon, vocab, si, so, cs, config.n_shots, rng);
    p.target = build_translation_prompt(lexicon, vocab, ti, to, ct, config.n_shots, rng);
    p.tracked = std::move(tracked);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PromptGroup> build_groups(GroupKind kind, const ExperimentConfig& config,
                                      const ConceptLexicon& lexicon, const Vocab& vocab, Rng& rng) {
  check_languages(lexicon, config);
  const auto all = ordered_pairs(lexicon);
  const auto codes = language_codes(lexicon);
  const auto concepts = lexicon.concepts();
  const std::size_t k = config.k;
  if (concepts.size() < 2) throw Error("dataset needs at least two concepts");
  if (kind == GroupKind::language_pairs) {
    if (config.source_pairs.empty() && k > codes.size())
      throw Error("k = " + std::to_string(k) + " exceeds the " + std::to_string(codes.size()) +
                  " available languages");
    if (!config.source_pairs.empty() && config.source_pairs.size() < k)
      throw Error("k = " + std::to_string(k) + " needs at least that many source pairs");
  }

  // k pairs with pairwise distinct inputs and pairwise distinct outputs.
  auto draw_source_pairs = [&]() -> std::optional<std::vector<LangPair>> {
    std::vector<LangPair> pairs;
    if (!config.source_pairs.empty()) {
      pairs = config.source_pairs;
      std::shuffle(pairs.begin(), pairs.end(), rng);
      pairs.resize(k);
    } else {
      auto ins = codes, outs = codes;
      std::shuffle(ins.begin(), ins.end(), rng);
      std::shuffle(outs.begin(), outs.end(), rng);
      for (std::size_t i = 0; i < k; ++i) pairs.emplace_back(ins[i], outs[i]);
    }
    std::set<std::string> seen_in, seen_out;
    for (const auto& [in, out] : pairs)
      if (in == out || !seen_in.insert(in).second || !seen_out.insert(out).second)
        return std::nullopt;
    return pairs;
  };

  Rejections rejections(config.max_attempts);
  std::vector<PromptGroup> out;
  while (out.size() < config.n_pairs) {
    std::vector<LangPair> pairs;
    if (kind == GroupKind::language_pairs) {
      auto drawn = draw_source_pairs();
      if (!drawn) {
        rejections.reject("source pairs do not have distinct input and output languages");
        continue;
      }
      pairs = std::move(*drawn);
    } else {
      const auto& p = pick(config.source_pairs.empty() ? all : config.source_pairs, rng);
      pairs.assign(k, p);
    }
    const auto [ti, to] = draw_target(config, all, rng);
    const auto& cs = pick(concepts, rng);
    const auto& ct = pick(concepts, rng);
    const std::string& so = pairs.front().second;
    if (to == so) {
      rejections.reject("target output language equals source output language " + so);
      continue;
    }
    if (cs == ct) {
      rejections.reject("source and target concept both " + cs);
      continue;
    }
    bool covered = covers(lexicon, ct, {ti, to, so}) && covers(lexicon, cs, {to});
    for (const auto& [in, o] : pairs) covered = covered && covers(lexicon, cs, {in, o});
    if (!covered) {
      rejections.reject("lexicon lacks entries for " + cs + " or " + ct);
      continue;
    }
    auto tracked = make_tracked_sets(lexicon, vocab, cs, ct, so, to);
    if (auto why = overlap(tracked, vocab)) {
      rejections.reject(*why, true);
      continue;
    }
    PromptGroup g;
    for (const auto& [in, o] : pairs) {
      g.sources.push_back(build_translation_prompt(lexicon, vocab, in, o, cs, config.n_shots, rng));
      g.source_answers.push_back(first_tokens(lexicon, vocab, cs, o));
    }
    g.target = build_translation_prompt(lexicon, vocab, ti, to, ct, config.n_shots, rng);
    g.tracked = std::move(tracked);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<ControlItem> build_control_items(ControlVariant variant, const ExperimentConfig& config,
                                             const ConceptLexicon& lexicon, const Vocab& vocab,
                                             Rng& rng) {
  check_languages(lexicon, config);
  const auto all = ordered_pairs(lexicon);
  const auto concepts = lexicon.concepts();
  Rejections rejections(config.max_attempts);
  std::vector<ControlItem> out;
  while (out.size() < config.n_pairs) {
    const auto [ti, to] = draw_target(config, all, rng);
    const auto& ct = pick(concepts, rng);
    if (!covers(lexicon, ct, {ti, to})) {
      rejections.reject("lexicon lacks entries for " + ct);
      continue;
    }
    ControlItem item;
    item.source = build_control_prompt(variant, vocab, lexicon, config.n_shots, rng);
    item.target = build_translation_prompt(lexicon, vocab, ti, to, ct, config.n_shots, rng);
    item.tracked = {{kTgtTgt, first_tokens(lexicon, vocab, ct, to)}};
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace latentpatch
