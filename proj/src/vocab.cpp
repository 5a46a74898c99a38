#include "latentpatch/vocab.hpp"

#include <cctype>
#include <fstream>

#include "latentpatch/error.hpp"

namespace latentpatch {

Vocab::Vocab(std::vector<std::string> tokens,
             std::map<std::string, std::vector<std::string>> segmentation)
    : tokens_(std::move(tokens)), segmentation_(std::move(segmentation)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("vocab: empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw Error("vocab: duplicate token '" + tokens_[i] + "'");
  }
  for (const auto& [word, pieces] : segmentation_) {
    if (pieces.empty()) throw Error("vocab: empty segmentation for '" + word + "'");
    std::string joined;
    for (const auto& p : pieces) {
      if (!index_.contains(p))
        throw Error("vocab: segmentation of '" + word + "' uses unknown token '" + p + "'");
      joined += p;
    }
    if (joined != word)
      throw Error("vocab: segmentation of '" + word + "' concatenates to '" + joined + "'");
  }
  auto special = [&](const char* s, const char* what) {
    auto it = index_.find(s);
    if (it == index_.end()) throw Error(std::string("vocab: missing special token for ") + what);
    return it->second;
  };
  newline_ = special("\n", "newline");
  space_ = special(" ", "space");
  quote_ = special("\"", "quote");
  colon_ = special(":", "colon");
  dash_ = special("-", "dash");
  at_ = special("@", "'@'");
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  try {
    return Vocab(j.at("tokens").get<std::vector<std::string>>(),
                 j.value("segmentation", std::map<std::string, std::vector<std::string>>{}));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("vocab: malformed file: ") + e.what());
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocab '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("vocab '" + path.string() + "': " + e.what());
  }
}

nlohmann::json Vocab::to_json() const {
  return {{"tokens", tokens_}, {"segmentation", segmentation_}};
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << to_json().dump(1) << '\n';
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) throw Error("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocab::find(std::string_view text) const {
  auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view text) const {
  if (auto t = find(text)) return *t;
  throw Error("unknown token '" + std::string(text) + "'");
}

bool Vocab::is_separator(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && (std::isspace(u) || std::ispunct(u));
}

std::vector<TokenId> Vocab::segment(std::string_view word) const {
  auto it = segmentation_.find(std::string(word));
  if (it != segmentation_.end()) {
    std::vector<TokenId> out;
    for (const auto& p : it->second) out.push_back(index_.at(p));
    return out;
  }
  if (auto t = find(word)) return {*t};
  throw Error("unknown word '" + std::string(word) + "'");
}

std::vector<TokenId> Vocab::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_separator(text[i])) {
      const auto t = find(text.substr(i, 1));
      if (!t) throw Error("unknown symbol '" + std::string(text.substr(i, 1)) + "'");
      out.push_back(*t);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_separator(text[j])) ++j;
    const auto ids = segment(text.substr(i, j - i));
    out.insert(out.end(), ids.begin(), ids.end());
    i = j;
  }
  return out;
}

std::string Vocab::detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) out += token(t);
  return out;
}

}  // namespace latentpatch
