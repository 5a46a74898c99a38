#include "latentpatch/prompts.hpp"

#include <algorithm>

#include "latentpatch/error.hpp"

namespace latentpatch {

namespace {

class LineWriter {
 public:
  explicit LineWriter(const Vocab& vocab) : vocab_(vocab) {}

  void name(std::string_view display) {
    const auto t = vocab_.find(display);
    if (!t) throw Error("language name '" + std::string(display) + "' is not a single token");
    tokens.push_back(*t);
  }
  void word(std::string_view w) {
    const auto ids = vocab_.segment(w);
    tokens.insert(tokens.end(), ids.begin(), ids.end());
  }
  void push(TokenId t) { tokens.push_back(t); }

  // `<name>: "<word>"`
  void slot(std::string_view display, std::string_view w) {
    open_slot(display);
    word(w);
    push(vocab_.quote());
  }
  // `<name>: "`
  void open_slot(std::string_view display) {
    name(display);
    push(vocab_.colon());
    push(vocab_.space());
    push(vocab_.quote());
  }
  // ` - `
  void dash() {
    push(vocab_.space());
    push(vocab_.dash());
    push(vocab_.space());
  }

  std::vector<TokenId> tokens;

 private:
  const Vocab& vocab_;
};

template <class T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

std::vector<TokenId> random_template(const Vocab& vocab, const ConceptLexicon& lexicon,
                                     std::size_t n_shots, Rng& rng) {
  std::vector<std::pair<std::string, std::string>> cells;
  for (const auto& [c, by_lang] : lexicon.entries())
    for (const auto& [lang, _] : by_lang) cells.emplace_back(c, lang);
  if (cells.empty()) throw Error("lexicon has no entries");
  const auto& langs = lexicon.languages();
  auto rand_name = [&] { return pick(langs, rng).name; };
  auto rand_word = [&] {
    const auto& [c, lang] = pick(cells, rng);
    return lexicon.words(c, lang).front();
  };

  LineWriter w(vocab);
  for (std::size_t s = 0; s < n_shots; ++s) {
    const auto in = rand_name();
    const auto win = rand_word();
    w.slot(in, win);
    w.dash();
    const auto out = rand_name();
    const auto wout = rand_word();
    w.slot(out, wout);
    w.push(vocab.newline());
  }
  const auto in = rand_name();
  const auto win = rand_word();
  w.slot(in, win);
  w.dash();
  w.open_slot(rand_name());
  return std::move(w.tokens);
}

}  // namespace

nlohmann::json to_json(const TranslationPrompt& p) {
  return {{"tokens", p.tokens},
          {"n", p.n},
          {"rho", p.rho},
          {"lang_in", p.meta.lang_in},
          {"lang_out", p.meta.lang_out},
          {"concept", p.meta.concept_id},
          {"shots", p.meta.shots}};
}

TranslationPrompt build_translation_prompt(const ConceptLexicon& lexicon, const Vocab& vocab,
                                           std::string_view lang_in, std::string_view lang_out,
                                           std::string_view concept_id, std::size_t n_shots,
                                           Rng& rng) {
  std::vector<std::string> candidates;
  for (const auto& c : lexicon.concepts())
    if (c != concept_id && lexicon.has(c, lang_in) && lexicon.has(c, lang_out))
      candidates.push_back(c);
  if (candidates.size() < n_shots)
    throw Error("not enough shot concepts for " + std::string(lang_in) + "->" +
                std::string(lang_out) + ": need " + std::to_string(n_shots) + ", have " +
                std::to_string(candidates.size()));
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(n_shots);
  return build_translation_prompt(lexicon, vocab, lang_in, lang_out, concept_id, candidates);
}

TranslationPrompt build_translation_prompt(const ConceptLexicon& lexicon, const Vocab& vocab,
                                           std::string_view lang_in, std::string_view lang_out,
                                           std::string_view concept_id,
                                           const std::vector<std::string>& shots) {
  const auto& in = lexicon.language(lang_in);
  const auto& out = lexicon.language(lang_out);
  LineWriter w(vocab);
  for (const auto& s : shots) {
    if (s == concept_id)
      throw Error("shot concept '" + s + "' equals the concept under test");
    w.slot(in.name, lexicon.words(s, lang_in).front());
    w.dash();
    w.slot(out.name, lexicon.words(s, lang_out).front());
    w.push(vocab.newline());
  }
  lexicon.words(concept_id, lang_out);
  w.open_slot(in.name);
  w.word(lexicon.words(concept_id, lang_in).front());
  TranslationPrompt p;
  p.rho = w.tokens.size() - 1;
  w.push(vocab.quote());
  w.dash();
  w.open_slot(out.name);
  p.n = w.tokens.size() - 1;
  p.tokens = std::move(w.tokens);
  p.meta = {std::string(lang_in), std::string(lang_out), std::string(concept_id), shots};
  return p;
}

std::string to_string(ControlVariant v) {
  switch (v) {
    case ControlVariant::random_template: return "random_template";
    case ControlVariant::empty_context: return "empty_context";
    case ControlVariant::at_sign: return "at_sign";
    case ControlVariant::shuffled: return "shuffled";
  }
  return "?";
}

ControlVariant control_variant_from_string(std::string_view s) {
  for (auto v : all_control_variants())
    if (to_string(v) == s) return v;
  throw Error("unknown control variant '" + std::string(s) + "'");
}

const std::vector<ControlVariant>& all_control_variants() {
  static const std::vector<ControlVariant> all = {
      ControlVariant::random_template, ControlVariant::empty_context, ControlVariant::at_sign,
      ControlVariant::shuffled};
  return all;
}

ControlPrompt build_control_prompt(ControlVariant variant, const Vocab& vocab,
                                   const ConceptLexicon& lexicon, std::size_t n_shots, Rng& rng) {
  ControlPrompt p;
  p.variant = variant;
  switch (variant) {
    case ControlVariant::random_template:
      p.tokens = random_template(vocab, lexicon, n_shots, rng);
      break;
    case ControlVariant::empty_context:
      p.tokens = vocab.tokenize("B: \"");
      break;
    case ControlVariant::at_sign:
    case ControlVariant::shuffled:
      p.tokens = random_template(vocab, lexicon, n_shots, rng);
      std::replace(p.tokens.begin(), p.tokens.end(), vocab.quote(), vocab.at_sign());
      if (variant == ControlVariant::shuffled) std::shuffle(p.tokens.begin(), p.tokens.end(), rng);
      break;
  }
  p.n = p.tokens.size() - 1;
  return p;
}

IdentityPrompt build_identity_prompt(const Vocab& vocab) {
  IdentityPrompt p;
  p.tokens = vocab.tokenize(kIdentityText);
  p.n = p.tokens.size() - 1;
  return p;
}

}  // namespace latentpatch
