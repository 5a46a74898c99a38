#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/types.hpp"
#include "latentpatch/vocab.hpp"

namespace latentpatch {

struct Language {
  std::string code;
  std::string name;  // display name, e.g. "Français"

  friend bool operator==(const Language&, const Language&) = default;
};

/// (concept, language) -> word list. Concepts iterate in sorted id order.
class ConceptLexicon {
 public:
  ConceptLexicon(std::vector<Language> languages,
                 std::map<std::string, std::map<std::string, std::vector<std::string>>> entries);

  static ConceptLexicon from_json(const nlohmann::json& j);
  static ConceptLexicon load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<Language>& languages() const { return languages_; }
  const Language& language(std::string_view code) const;
  bool has_language(std::string_view code) const;
  /// Language whose display name is `name`, if any.
  std::optional<std::string> code_for_name(std::string_view name) const;

  std::vector<std::string> concepts() const;
  bool has(std::string_view concept_id, std::string_view lang) const;
  const std::vector<std::string>& words(std::string_view concept_id, std::string_view lang) const;
  const std::map<std::string, std::map<std::string, std::vector<std::string>>>& entries() const {
    return entries_;
  }

 private:
  std::vector<Language> languages_;
  std::map<std::string, std::map<std::string, std::vector<std::string>>> entries_;
};

/// Deduplicated first token ids over all words of w(C^l).
std::set<TokenId> first_tokens(const ConceptLexicon& lexicon, const Vocab& vocab,
                               std::string_view concept_id, std::string_view lang);

struct TrackedSet {
  std::string label;
  std::set<TokenId> tokens;

  friend bool operator==(const TrackedSet&, const TrackedSet&) = default;
};
using TrackedSets = std::vector<TrackedSet>;

struct Violation {
  std::string set_a;
  std::string set_b;
  TokenId token = 0;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct DisjointnessReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

DisjointnessReport validate_disjoint(std::span<const TrackedSet> sets);

/// Human-readable violation lines, tokens rendered through the vocab.
std::vector<std::string> describe(const DisjointnessReport& report, const Vocab& vocab);

struct LexiconReport {
  std::vector<std::string> coverage_problems;
  DisjointnessReport disjointness;
  bool ok() const { return coverage_problems.empty() && disjointness.ok(); }
};

/// Coverage: every language display name is a single token, every word
/// segments, every concept has every listed language. Disjointness: the
/// first-token sets of all (concept, language) entries over `languages`
/// (all languages when empty) are pairwise disjoint.
LexiconReport validate_lexicon(const ConceptLexicon& lexicon, const Vocab& vocab,
                               std::span<const std::string> languages = {});

}  // namespace latentpatch
