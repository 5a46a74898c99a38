#include "latentpatch/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include "latentpatch/error.hpp"

namespace latentpatch {

ConceptLexicon::ConceptLexicon(
    std::vector<Language> languages,
    std::map<std::string, std::map<std::string, std::vector<std::string>>> entries)
    : languages_(std::move(languages)), entries_(std::move(entries)) {
  if (languages_.empty()) throw Error("lexicon: no languages");
  std::set<std::string> codes, names;
  for (const auto& l : languages_) {
    if (l.code.empty() || l.name.empty()) throw Error("lexicon: empty language code or name");
    if (!codes.insert(l.code).second) throw Error("lexicon: duplicate language '" + l.code + "'");
    if (!names.insert(l.name).second)
      throw Error("lexicon: duplicate display name '" + l.name + "'");
  }
  for (const auto& [c, by_lang] : entries_) {
    for (const auto& [lang, words] : by_lang) {
      if (!codes.contains(lang))
        throw Error("lexicon: concept '" + c + "' uses unknown language '" + lang + "'");
      if (words.empty()) throw Error("lexicon: empty word list for " + c + "^" + lang);
      for (const auto& w : words)
        if (w.empty()) throw Error("lexicon: empty word in " + c + "^" + lang);
    }
  }
}

ConceptLexicon ConceptLexicon::from_json(const nlohmann::json& j) {
  try {
    std::vector<Language> langs;
    for (const auto& [code, name] : j.at("languages").items())
      langs.push_back({code, name.get<std::string>()});
    return ConceptLexicon(
        std::move(langs),
        j.at("concepts").get<std::map<std::string, std::map<std::string, std::vector<std::string>>>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("lexicon: malformed file: ") + e.what());
  }
}

ConceptLexicon ConceptLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("lexicon '" + path.string() + "': " + e.what());
  }
}

nlohmann::json ConceptLexicon::to_json() const {
  nlohmann::json langs = nlohmann::json::object();
  for (const auto& l : languages_) langs[l.code] = l.name;
  return {{"languages", langs}, {"concepts", entries_}};
}

void ConceptLexicon::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << to_json().dump(1) << '\n';
}

const Language& ConceptLexicon::language(std::string_view code) const {
  for (const auto& l : languages_)
    if (l.code == code) return l;
  throw Error("unknown language '" + std::string(code) + "'");
}

bool ConceptLexicon::has_language(std::string_view code) const {
  return std::any_of(languages_.begin(), languages_.end(),
                     [&](const Language& l) { return l.code == code; });
}

std::optional<std::string> ConceptLexicon::code_for_name(std::string_view name) const {
  for (const auto& l : languages_)
    if (l.name == name) return l.code;
  return std::nullopt;
}

std::vector<std::string> ConceptLexicon::concepts() const {
  std::vector<std::string> out;
  for (const auto& [c, _] : entries_) out.push_back(c);
  return out;
}

bool ConceptLexicon::has(std::string_view concept_id, std::string_view lang) const {
  auto it = entries_.find(std::string(concept_id));
  return it != entries_.end() && it->second.contains(std::string(lang));
}

const std::vector<std::string>& ConceptLexicon::words(std::string_view concept_id,
                                                      std::string_view lang) const {
  auto it = entries_.find(std::string(concept_id));
  if (it != entries_.end()) {
    auto jt = it->second.find(std::string(lang));
    if (jt != it->second.end()) return jt->second;
  }
  throw Error("lexicon has no entry for " + std::string(concept_id) + "^" + std::string(lang));
}

std::set<TokenId> first_tokens(const ConceptLexicon& lexicon, const Vocab& vocab,
                               std::string_view concept_id, std::string_view lang) {
  std::set<TokenId> out;
  for (const auto& w : lexicon.words(concept_id, lang)) out.insert(vocab.segment(w).front());
  return out;
}

DisjointnessReport validate_disjoint(std::span<const TrackedSet> sets) {
  DisjointnessReport report;
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t b = a + 1; b < sets.size(); ++b) {
      std::vector<TokenId> common;
      std::set_intersection(sets[a].tokens.begin(), sets[a].tokens.end(),
                            sets[b].tokens.begin(), sets[b].tokens.end(),
                            std::back_inserter(common));
      for (TokenId t : common) report.violations.push_back({sets[a].label, sets[b].label, t});
    }
  }
  return report;
}

std::vector<std::string> describe(const DisjointnessReport& report, const Vocab& vocab) {
  std::vector<std::string> out;
  for (const auto& v : report.violations) {
    const std::string tok = v.token < vocab.size() ? vocab.token(v.token) : "?";
    out.push_back(v.set_a + " and " + v.set_b + " share token '" + tok + "' (id " +
                  std::to_string(v.token) + ")");
  }
  return out;
}

LexiconReport validate_lexicon(const ConceptLexicon& lexicon, const Vocab& vocab,
                               std::span<const std::string> languages) {
  LexiconReport report;
  std::vector<std::string> langs(languages.begin(), languages.end());
  if (langs.empty())
    for (const auto& l : lexicon.languages()) langs.push_back(l.code);

  for (const auto& l : lexicon.languages()) {
    if (!vocab.find(l.name))
      report.coverage_problems.push_back("display name '" + l.name + "' of " + l.code +
                                         " is not a single token");
  }
  for (const auto& code : langs)
    if (!lexicon.has_language(code))
      report.coverage_problems.push_back("unknown language '" + code + "'");

  TrackedSets sets;
  for (const auto& c : lexicon.concepts()) {
    for (const auto& code : langs) {
      if (!lexicon.has_language(code)) continue;
      if (!lexicon.has(c, code)) {
        report.coverage_problems.push_back("missing entry " + c + "^" + code);
        continue;
      }
      TrackedSet set{c + "^" + code, {}};
      for (const auto& w : lexicon.words(c, code)) {
        try {
          set.tokens.insert(vocab.segment(w).front());
        } catch (const Error& e) {
          report.coverage_problems.push_back(c + "^" + code + ": " + e.what());
        }
      }
      sets.push_back(std::move(set));
    }
  }
  report.disjointness = validate_disjoint(sets);
  return report;
}

}  // namespace latentpatch
