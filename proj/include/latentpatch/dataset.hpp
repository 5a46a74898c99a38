#pragma once

#include <set>
#include <vector>

#include "latentpatch/config.hpp"
#include "latentpatch/lexicon.hpp"
#include "latentpatch/prompts.hpp"

namespace latentpatch {

/// Source and target prompts with the four tracked first-token sets.
struct PromptPair {
  TranslationPrompt source;
  TranslationPrompt target;
  TrackedSets tracked;
};

/// k sources sharing one concept, patched as a mean into one target.
/// `source_answers[i]` is the first-token set of the concept in source i's
/// output language.
struct PromptGroup {
  std::vector<TranslationPrompt> sources;
  TranslationPrompt target;
  TrackedSets tracked;
  std::vector<std::set<TokenId>> source_answers;
};

struct ControlItem {
  ControlPrompt source;
  TranslationPrompt target;
  TrackedSets tracked;  // the target concept in the target output language only
};

/// The four labelled sets for source concept/language and target
/// concept/language.
TrackedSets make_tracked_sets(const ConceptLexicon& lexicon, const Vocab& vocab,
                              const std::string& src_concept, const std::string& tgt_concept,
                              const std::string& src_lang, const std::string& tgt_lang);

/// Source/target pairs with distinct concepts, input and output languages.
/// Candidates whose tracked sets overlap are rejected and redrawn; more than
/// config.max_attempts rejections is an error naming the last overlap.
std::vector<PromptPair> build_pairs(const ExperimentConfig& config, const ConceptLexicon& lexicon,
                                    const Vocab& vocab, Rng& rng);

enum class GroupKind {
  language_pairs,  // k sources with pairwise distinct input and output languages
  contexts,        // k sources with one language pair and independent shots
};

std::vector<PromptGroup> build_groups(GroupKind kind, const ExperimentConfig& config,
                                      const ConceptLexicon& lexicon, const Vocab& vocab, Rng& rng);

std::vector<ControlItem> build_control_items(ControlVariant variant, const ExperimentConfig& config,
                                             const ConceptLexicon& lexicon, const Vocab& vocab,
                                             Rng& rng);

}  // namespace latentpatch
