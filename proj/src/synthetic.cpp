#include "latentpatch/synthetic.hpp"

#include <array>
#include <random>
#include <set>

#include "latentpatch/error.hpp"
#include "latentpatch/types.hpp"

namespace latentpatch {

namespace {

constexpr std::array<std::pair<const char*, const char*>, 10> kLanguages = {{
    {"alv", "Alvish"},
    {"bre", "Brenic"},
    {"cor", "Corvan"},
    {"dul", "Dulmic"},
    {"est", "Estari"},
    {"fen", "Fennic"},
    {"gor", "Gorthic"},
    {"hal", "Halvene"},
    {"ism", "Ismeri"},
    {"jor", "Jorvic"},
}};

constexpr std::array<const char*, 48> kConcepts = {
    "BOOK",  "CLOUD",  "LAKE",  "SHOP",  "CAT",    "DOG",   "SUN",   "MOON",
    "TREE",  "RIVER",  "HOUSE", "BREAD", "WATER",  "FIRE",  "STONE", "BIRD",
    "FISH",  "HORSE",  "APPLE", "LEMON", "SALT",   "SNOW",  "RAIN",  "WIND",
    "DOOR",  "TABLE",  "CHAIR", "KEY",   "SHIP",   "ROAD",  "CITY",  "FIELD",
    "FLOWER", "EGG",   "MILK",  "GOLD",  "IRON",   "GLASS", "SALTY", "NIGHT",
    "DAY",   "STAR",   "HILL",  "SEA",   "ISLAND", "BELL",  "CROWN", "MIRROR"};

constexpr std::array<const char*, 14> kOnsets = {"b", "d", "f", "g", "k", "l", "m",
                                                 "n", "p", "r", "s", "t", "v", "z"};
constexpr std::array<const char*, 5> kVowels = {"a", "e", "i", "o", "u"};

std::string random_stem(Rng& rng) {
  std::uniform_int_distribution<std::size_t> on(0, kOnsets.size() - 1);
  std::uniform_int_distribution<std::size_t> vo(0, kVowels.size() - 1);
  std::uniform_int_distribution<int> syl(2, 3);
  std::string s;
  const int n = syl(rng);
  for (int i = 0; i < n; ++i) {
    s += kOnsets[on(rng)];
    s += kVowels[vo(rng)];
  }
  return s;
}

}  // namespace

nlohmann::json to_json(const SyntheticConfig& c) {
  return {{"n_languages", c.n_languages},
          {"n_concepts", c.n_concepts},
          {"multi_token_rate", c.multi_token_rate},
          {"synonym_stem_rate", c.synonym_stem_rate},
          {"cognate_rate", c.cognate_rate},
          {"false_friend_rate", c.false_friend_rate},
          {"max_vocab", c.max_vocab},
          {"seed", c.seed}};
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  try {
    c.n_languages = j.value("n_languages", c.n_languages);
    c.n_concepts = j.value("n_concepts", c.n_concepts);
    c.multi_token_rate = j.value("multi_token_rate", c.multi_token_rate);
    c.synonym_stem_rate = j.value("synonym_stem_rate", c.synonym_stem_rate);
    c.cognate_rate = j.value("cognate_rate", c.cognate_rate);
    c.false_friend_rate = j.value("false_friend_rate", c.false_friend_rate);
    c.max_vocab = j.value("max_vocab", c.max_vocab);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("synthetic config: ") + e.what());
  }
  return c;
}

SyntheticSuite make_synthetic_suite(const SyntheticConfig& config) {
  if (config.n_languages < 2 || config.n_languages > kLanguages.size())
    throw Error("synthetic suite supports 2.." + std::to_string(kLanguages.size()) + " languages");
  if (config.n_concepts < 2 || config.n_concepts > kConcepts.size())
    throw Error("synthetic suite supports 2.." + std::to_string(kConcepts.size()) + " concepts");

  Rng rng(config.seed);
  std::bernoulli_distribution multi(config.multi_token_rate);
  std::bernoulli_distribution synonym(config.synonym_stem_rate);
  std::bernoulli_distribution cognate(config.cognate_rate);
  std::bernoulli_distribution false_friend(config.false_friend_rate);
  std::discrete_distribution<int> n_words({55, 30, 15});

  std::vector<std::string> tokens = {"\n", " ", "\"", ":", "-", "@", "?",
                                     "A", "B", "king", "1135", "hello"};
  std::set<std::string> used(tokens.begin(), tokens.end());
  std::vector<Language> languages;
  for (std::size_t l = 0; l < config.n_languages; ++l) {
    languages.push_back({kLanguages[l].first, kLanguages[l].second});
    tokens.push_back(kLanguages[l].second);
    used.insert(kLanguages[l].second);
  }

  // Two-letter suffix pool per language; never a first token.
  std::vector<std::vector<std::string>> suffixes(config.n_languages);
  for (std::size_t l = 0; l < config.n_languages; ++l) {
    while (suffixes[l].size() < 4) {
      std::uniform_int_distribution<std::size_t> vo(0, kVowels.size() - 1);
      std::uniform_int_distribution<std::size_t> on(0, kOnsets.size() - 1);
      std::string s = std::string(kVowels[vo(rng)]) + kOnsets[on(rng)];
      if (used.insert(s).second) {
        suffixes[l].push_back(s);
        tokens.push_back(s);
      }
    }
  }

  auto fresh_stem = [&] {
    for (;;) {
      std::string s = random_stem(rng);
      if (used.insert(s).second) {
        tokens.push_back(s);
        return s;
      }
    }
  };

  std::map<std::string, std::map<std::string, std::vector<std::string>>> entries;
  std::map<std::string, std::vector<std::string>> segmentation;
  std::vector<std::pair<std::string, std::size_t>> all_stems;  // (stem, language)

  for (std::size_t c = 0; c < config.n_concepts; ++c) {
    const std::string cid = kConcepts[c];
    std::vector<std::string> concept_stems;
    for (std::size_t l = 0; l < config.n_languages; ++l) {
      const auto& code = languages[l].code;
      std::uniform_int_distribution<std::size_t> suf(0, suffixes[l].size() - 1);
      std::vector<std::string> words;
      std::set<std::string> surfaces;
      auto add_word = [&](const std::string& stem, bool with_suffix) {
        std::vector<std::string> pieces = {stem};
        if (with_suffix) pieces.push_back(suffixes[l][suf(rng)]);
        std::string surface;
        for (const auto& p : pieces) surface += p;
        if (!surfaces.insert(surface).second) return;
        words.push_back(surface);
        if (pieces.size() > 1) segmentation[surface] = pieces;
      };

      std::string stem;
      if (!concept_stems.empty() && cognate(rng)) {
        std::uniform_int_distribution<std::size_t> pick(0, concept_stems.size() - 1);
        stem = concept_stems[pick(rng)];
      } else if (!all_stems.empty() && false_friend(rng)) {
        std::uniform_int_distribution<std::size_t> pick(0, all_stems.size() - 1);
        const auto& [other, other_lang] = all_stems[pick(rng)];
        stem = other_lang != l ? other : fresh_stem();
      } else {
        stem = fresh_stem();
      }
      concept_stems.push_back(stem);
      add_word(stem, multi(rng));

      const int extra = n_words(rng);
      for (int e = 0; e < extra; ++e) {
        if (synonym(rng))
          add_word(stem, true);
        else
          add_word(fresh_stem(), multi(rng));
      }
      entries[cid][code] = std::move(words);
    }
    for (std::size_t l = 0; l < concept_stems.size(); ++l) all_stems.emplace_back(concept_stems[l], l);
  }

  if (tokens.size() > config.max_vocab)
    throw Error("synthetic vocab has " + std::to_string(tokens.size()) + " tokens, limit is " +
                std::to_string(config.max_vocab));
  return {Vocab(std::move(tokens), std::move(segmentation)),
          ConceptLexicon(std::move(languages), std::move(entries))};
}

}  // namespace latentpatch
