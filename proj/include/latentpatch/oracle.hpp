#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/lexicon.hpp"
#include "latentpatch/trace.hpp"
#include "latentpatch/vocab.hpp"

namespace latentpatch {

enum class Hypothesis { H1, H2 };

std::string to_string(Hypothesis h);
Hypothesis hypothesis_from_string(std::string_view s);

/// Oracle layer schedule: the answer-slot marker is written at j_marker
/// (0 = part of the embedding), the output language at j_lang, and the
/// concept is read from rho at j_read.
struct OracleSpec {
  Hypothesis mode = Hypothesis::H1;
  std::size_t n_layers = 8;
  std::size_t j_marker = 1;
  std::size_t j_lang = 3;
  std::size_t j_read = 5;
  double tau = 0.8;
  double beta = 12.0;
  double noise_std = 0.15;
  std::size_t concept_dims = 64;
  std::size_t entangled_dims = 256;
  std::size_t max_seq_len = 256;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const OracleSpec&, const OracleSpec&) = default;
};

nlohmann::json to_json(const OracleSpec& spec);
OracleSpec oracle_spec_from_json(const nlohmann::json& j);

/// Random orthonormal basis of R^d split into mutually orthogonal blocks:
/// task (quote, at, plain token, marker), one direction per language, a
/// concept block whose leading directions are z_C, and an entangled block.
class SubspaceDecomposition {
 public:
  SubspaceDecomposition(std::size_t n_languages, std::size_t concept_dims,
                        std::size_t entangled_dims, std::uint64_t seed);

  std::size_t d_model() const { return basis_.size(); }
  std::size_t n_languages() const { return n_languages_; }
  std::size_t concept_dims() const { return concept_dims_; }
  std::size_t entangled_dims() const { return entangled_dims_; }

  std::span<const float> u_quote() const { return basis_[0]; }
  std::span<const float> u_at() const { return basis_[1]; }
  std::span<const float> u_tok() const { return basis_[2]; }
  std::span<const float> u_marker() const { return basis_[3]; }
  std::span<const float> z_lang(std::size_t l) const;
  std::span<const float> z_concept(std::size_t c) const;
  std::span<const float> concept_axis(std::size_t k) const;
  std::span<const float> entangled_axis(std::size_t k) const;

  /// Coordinates of x in the concept / entangled blocks.
  std::vector<double> concept_coords(std::span<const float> x) const;
  std::vector<double> entangled_coords(std::span<const float> x) const;
  /// Orthogonal projection of x onto the concept block, in R^d.
  std::vector<float> concept_projection(std::span<const float> x) const;
  /// sum_k coords[k] * entangled_axis(k), in R^d.
  std::vector<float> from_entangled(std::span<const double> coords) const;

 private:
  std::size_t lang_offset() const { return 4; }
  std::size_t concept_offset() const { return 4 + n_languages_; }
  std::size_t entangled_offset() const { return 4 + n_languages_ + concept_dims_; }

  std::size_t n_languages_;
  std::size_t concept_dims_;
  std::size_t entangled_dims_;
  std::vector<std::vector<float>> basis_;
};

/// Per-position parse of the translation template, using tokens 0..i only.
struct SlotInfo {
  bool answer_slot = false;        // opening delimiter of an output slot
  std::size_t rho = 0;             // last token of the word in the input slot
  TokenId delimiter = 0;
  std::optional<std::size_t> out_lang;  // agreed output language, if any
  std::optional<std::pair<std::size_t, std::size_t>> word;  // (concept, language) ending here
};

/// Analytic model with the residual-stream interface. Under H1 a word carries
/// z_C + z_lang + noise and the reader copies the concept-block projection;
/// under H2 a word carries v_{C,lang} and the reader looks up the nearest
/// pair vector and maps it to the requested output language.
class OracleModel final : public ResidualModel {
 public:
  OracleModel(OracleSpec spec, const ConceptLexicon& lexicon, const Vocab& vocab);

  std::size_t n_layers() const override { return spec_.n_layers; }
  std::size_t d_model() const override { return basis_.d_model(); }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t max_seq_len() const override { return spec_.max_seq_len; }

  const OracleSpec& spec() const { return spec_; }
  const SubspaceDecomposition& decomposition() const { return basis_; }
  const std::vector<std::string>& concepts() const { return concepts_; }
  const std::vector<std::string>& languages() const { return languages_; }
  std::size_t concept_index(std::string_view id) const;
  std::size_t language_index(std::string_view code) const;

  /// Unit vector v_{C,l} in entangled coordinates.
  std::span<const double> pair_vector(std::size_t c, std::size_t l) const;
  /// Residual payload written at the last token of a word of (c, l).
  std::span<const float> word_payload(std::size_t c, std::size_t l) const;

  std::vector<SlotInfo> analyze(std::span<const TokenId> tokens) const;

 protected:
  void embed(std::span<const TokenId> tokens, std::span<float> out) const override;
  void apply_layer(std::size_t layer, std::span<const TokenId> tokens,
                   std::span<const float> prev, std::span<float> next) const override;
  std::vector<float> decode(std::span<const float> last_state) const override;

 private:
  void read_concept(std::span<const float> source, std::span<const float> here,
                    std::span<float> out) const;
  std::optional<std::size_t> strongest_language(std::span<const float> x) const;

  OracleSpec spec_;
  SubspaceDecomposition basis_;
  std::size_t vocab_size_;
  std::vector<std::string> concepts_;
  std::vector<std::string> languages_;
  std::vector<std::optional<std::size_t>> token_language_;  // display-name tokens
  std::vector<bool> token_separator_;
  TokenId quote_, at_, colon_, space_, dash_, newline_;
  std::vector<std::map<std::vector<TokenId>, std::size_t>> words_;  // per language
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> first_token_pairs_;
  std::vector<std::vector<double>> pair_vectors_;  // c * n_lang + l
  std::vector<std::vector<float>> payloads_;       // c * n_lang + l
};

enum class ExperimentKind { exp1, exp2, exp3 };

/// Dominant tracked label per patch layer 0..n_layers.
std::vector<std::string> expected_regimes(const OracleSpec& spec, ExperimentKind kind);

}  // namespace latentpatch
