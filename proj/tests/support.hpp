#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "latentpatch/lexicon.hpp"
#include "latentpatch/model_spec.hpp"
#include "latentpatch/oracle.hpp"
#include "latentpatch/synthetic.hpp"
#include "latentpatch/transformer.hpp"
#include "latentpatch/vocab.hpp"
#include "latentpatch/weights.hpp"

namespace latentpatch::testing {

inline ModelSpec small_spec() {
  ModelSpec s;
  s.d_model = 16;
  s.n_layers = 2;
  s.n_heads = 2;
  s.d_ff = 32;
  s.vocab_size = 40;
  s.max_seq_len = 32;
  return s;
}

inline Transformer random_transformer(const ModelSpec& spec, std::uint64_t seed = 7,
                                      float stddev = 0.02f) {
  return Transformer(spec, random_weights(spec, seed, stddev));
}

inline std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t len,
                                          std::size_t vocab) {
  std::uniform_int_distribution<TokenId> d(0, static_cast<TokenId>(vocab - 1));
  std::vector<TokenId> out(len);
  for (auto& t : out) t = d(rng);
  return out;
}

inline std::vector<float> random_vector(std::mt19937_64& rng, std::size_t n, float scale = 1.0f) {
  std::normal_distribution<float> d(0.0f, scale);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("latentpatch-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// English/French lexicon with hand-written segmentations.
inline Vocab en_fr_vocab() {
  return Vocab({"\n", " ", "\"", ":", "-", "@", "?", "A", "B", "king", "1135", "hello",
                "English", "Français", "cloud", "nuage", "lake", "lac", "shop", "commerce",
                "magasin", "bout", "ique", "cat", "chat", "dog", "chien", "sun", "soleil",
                "Kat", "ze", "er"},
               {{"boutique", {"bout", "ique"}}, {"Katze", {"Kat", "ze"}}, {"Kater", {"Kat", "er"}}});
}

inline ConceptLexicon en_fr_lexicon() {
  return ConceptLexicon({{"en", "English"}, {"fr", "Français"}},
                        {{"CLOUD", {{"en", {"cloud"}}, {"fr", {"nuage"}}}},
                         {"LAKE", {{"en", {"lake"}}, {"fr", {"lac"}}}},
                         {"SHOP", {{"en", {"shop"}}, {"fr", {"commerce", "magasin", "boutique"}}}},
                         {"CAT", {{"en", {"cat"}}, {"fr", {"chat"}}}},
                         {"DOG", {{"en", {"dog"}}, {"fr", {"chien"}}}},
                         {"SUN", {{"en", {"sun"}}, {"fr", {"soleil"}}}}});
}

}  // namespace latentpatch::testing
