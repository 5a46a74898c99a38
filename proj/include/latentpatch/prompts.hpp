#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/lexicon.hpp"
#include "latentpatch/types.hpp"
#include "latentpatch/vocab.hpp"

namespace latentpatch {

struct PromptMeta {
  std::string lang_in;
  std::string lang_out;
  std::string concept_id;
  std::vector<std::string> shots;

  friend bool operator==(const PromptMeta&, const PromptMeta&) = default;
};

/// Few-shot translation prompt. n is the opening quote of the answer slot;
/// rho is the last token of the word to translate on the final line.
struct TranslationPrompt {
  std::vector<TokenId> tokens;
  std::size_t n = 0;
  std::size_t rho = 0;
  PromptMeta meta;

  friend bool operator==(const TranslationPrompt&, const TranslationPrompt&) = default;
};

nlohmann::json to_json(const TranslationPrompt& p);

/// Samples n_shots distinct demonstration concepts, all different from
/// concept_id and covered in both languages. Every slot uses the first listed
/// word of its concept.
TranslationPrompt build_translation_prompt(const ConceptLexicon& lexicon, const Vocab& vocab,
                                           std::string_view lang_in, std::string_view lang_out,
                                           std::string_view concept_id, std::size_t n_shots,
                                           Rng& rng);

/// Same template with an explicit shot list.
TranslationPrompt build_translation_prompt(const ConceptLexicon& lexicon, const Vocab& vocab,
                                           std::string_view lang_in, std::string_view lang_out,
                                           std::string_view concept_id,
                                           const std::vector<std::string>& shots);

enum class ControlVariant { random_template, empty_context, at_sign, shuffled };

std::string to_string(ControlVariant v);
ControlVariant control_variant_from_string(std::string_view s);
const std::vector<ControlVariant>& all_control_variants();

struct ControlPrompt {
  ControlVariant variant = ControlVariant::random_template;
  std::vector<TokenId> tokens;
  std::size_t n = 0;
};

/// random_template: the translation template with every language slot and
/// every word drawn independently at random. empty_context: `B: "`.
/// at_sign: random_template with quotes replaced by "@". shuffled: at_sign
/// with its tokens permuted.
ControlPrompt build_control_prompt(ControlVariant variant, const Vocab& vocab,
                                   const ConceptLexicon& lexicon, std::size_t n_shots, Rng& rng);

struct IdentityPrompt {
  std::vector<TokenId> tokens;
  std::size_t n = 0;
};

inline constexpr std::string_view kIdentityText = "king king\n1135 1135\nhello hello\n?";

IdentityPrompt build_identity_prompt(const Vocab& vocab);

}  // namespace latentpatch
