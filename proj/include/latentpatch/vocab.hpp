#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/types.hpp"

namespace latentpatch {

/// Word/punctuation-level toy tokenizer. ASCII whitespace and punctuation are
/// single-character tokens; every other maximal run of bytes is a word, which
/// is either listed in the segmentation table or is itself a token.
class Vocab {
 public:
  Vocab(std::vector<std::string> tokens,
        std::map<std::string, std::vector<std::string>> segmentation);

  static Vocab from_json(const nlohmann::json& j);
  static Vocab load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::map<std::string, std::vector<std::string>>& segmentation() const {
    return segmentation_;
  }

  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view text) const;
  TokenId id(std::string_view text) const;

  /// Token ids for one word; throws Error naming the word if it is unknown.
  std::vector<TokenId> segment(std::string_view word) const;
  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> tokens) const;

  static bool is_separator(char c);

  TokenId newline() const { return newline_; }
  TokenId space() const { return space_; }
  TokenId quote() const { return quote_; }
  TokenId colon() const { return colon_; }
  TokenId dash() const { return dash_; }
  TokenId at_sign() const { return at_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::vector<std::string>> segmentation_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId newline_ = 0, space_ = 0, quote_ = 0, colon_ = 0, dash_ = 0, at_ = 0;
};

}  // namespace latentpatch
