#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "latentpatch/lexicon.hpp"
#include "latentpatch/vocab.hpp"

namespace latentpatch {

struct SyntheticConfig {
  std::size_t n_languages = 6;
  std::size_t n_concepts = 40;
  double multi_token_rate = 0.35;  // words made of stem + suffix
  double synonym_stem_rate = 0.15; // extra words reusing the first word's stem
  double cognate_rate = 0.06;      // canonical stem copied from another language
  double false_friend_rate = 0.02; // stem copied from another concept elsewhere
  std::size_t max_vocab = 512;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const SyntheticConfig& c);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

struct SyntheticSuite {
  Vocab vocab;
  ConceptLexicon lexicon;
};

/// Generated languages with 1-3 words per (concept, language). Stems are
/// unique unless deliberately shared (cognates, false friends, synonyms), so
/// first-token collisions exist but are rare and known.
SyntheticSuite make_synthetic_suite(const SyntheticConfig& config = {});

}  // namespace latentpatch
