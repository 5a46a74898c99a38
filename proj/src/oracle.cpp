#include "latentpatch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <Eigen/Dense>

#include "latentpatch/error.hpp"
#include "latentpatch/kernels.hpp"
#include "latentpatch/measurement.hpp"

namespace latentpatch {

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void axpy(double a, std::span<const float> x, std::span<float> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += static_cast<float>(a * x[i]);
}

std::vector<double> random_unit(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (;;) {
    for (auto& x : v) x = g(rng);
    const double len = norm(v);
    if (len > 1e-12) {
      for (auto& x : v) x /= len;
      return v;
    }
  }
}

std::uint64_t fnv1a(std::span<const float> x) {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(x.data());
  for (std::size_t i = 0; i < x.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string to_string(Hypothesis h) { return h == Hypothesis::H1 ? "H1" : "H2"; }

Hypothesis hypothesis_from_string(std::string_view s) {
  if (s == "H1") return Hypothesis::H1;
  if (s == "H2") return Hypothesis::H2;
  throw Error("unknown oracle mode '" + std::string(s) + "' (expected H1 or H2)");
}

void OracleSpec::validate() const {
  if (n_layers < 2) throw Error("oracle: n_layers must be at least 2");
  if (!(j_marker < j_lang && j_lang < j_read && j_read <= n_layers))
    throw Error("oracle: schedule must satisfy j_marker < j_lang < j_read <= n_layers, got " +
                std::to_string(j_marker) + ", " + std::to_string(j_lang) + ", " +
                std::to_string(j_read) + ", " + std::to_string(n_layers));
  if (!(tau > 0.0 && tau < 1.0)) throw Error("oracle: tau must lie in (0, 1)");
  if (!(beta > 0.0)) throw Error("oracle: beta must be positive");
  if (!(noise_std >= 0.0)) throw Error("oracle: noise_std must be non-negative");
  if (concept_dims == 0 || entangled_dims == 0) throw Error("oracle: empty subspace");
  if (max_seq_len == 0) throw Error("oracle: max_seq_len must be positive");
}

nlohmann::json to_json(const OracleSpec& s) {
  return {{"mode", to_string(s.mode)},         {"n_layers", s.n_layers},
          {"j_marker", s.j_marker},            {"j_lang", s.j_lang},
          {"j_read", s.j_read},                {"tau", s.tau},
          {"beta", s.beta},                    {"noise_std", s.noise_std},
          {"concept_dims", s.concept_dims},    {"entangled_dims", s.entangled_dims},
          {"max_seq_len", s.max_seq_len},      {"seed", s.seed}};
}

OracleSpec oracle_spec_from_json(const nlohmann::json& j) {
  OracleSpec s;
  try {
    if (j.contains("mode")) s.mode = hypothesis_from_string(j.at("mode").get<std::string>());
    s.n_layers = j.value("n_layers", s.n_layers);
    s.j_marker = j.value("j_marker", s.j_marker);
    s.j_lang = j.value("j_lang", s.j_lang);
    s.j_read = j.value("j_read", s.j_read);
    s.tau = j.value("tau", s.tau);
    s.beta = j.value("beta", s.beta);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.concept_dims = j.value("concept_dims", s.concept_dims);
    s.entangled_dims = j.value("entangled_dims", s.entangled_dims);
    s.max_seq_len = j.value("max_seq_len", s.max_seq_len);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("oracle spec: ") + e.what());
  }
  s.validate();
  return s;
}

SubspaceDecomposition::SubspaceDecomposition(std::size_t n_languages, std::size_t concept_dims,
                                             std::size_t entangled_dims, std::uint64_t seed)
    : n_languages_(n_languages), concept_dims_(concept_dims), entangled_dims_(entangled_dims) {
  const std::size_t d = 4 + n_languages + concept_dims + entangled_dims;
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(d, d);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < d; ++r) m(r, c) = g(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  basis_.assign(d, std::vector<float>(d));
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t r = 0; r < d; ++r) basis_[k][r] = static_cast<float>(q(r, k));
}

std::span<const float> SubspaceDecomposition::z_lang(std::size_t l) const {
  if (l >= n_languages_) throw Error("language index out of range");
  return basis_[lang_offset() + l];
}

std::span<const float> SubspaceDecomposition::z_concept(std::size_t c) const {
  return concept_axis(c);
}

std::span<const float> SubspaceDecomposition::concept_axis(std::size_t k) const {
  if (k >= concept_dims_) throw Error("concept index out of range");
  return basis_[concept_offset() + k];
}

std::span<const float> SubspaceDecomposition::entangled_axis(std::size_t k) const {
  if (k >= entangled_dims_) throw Error("entangled index out of range");
  return basis_[entangled_offset() + k];
}

std::vector<double> SubspaceDecomposition::concept_coords(std::span<const float> x) const {
  std::vector<double> out(concept_dims_);
  for (std::size_t k = 0; k < concept_dims_; ++k) out[k] = dot(x, concept_axis(k));
  return out;
}

std::vector<double> SubspaceDecomposition::entangled_coords(std::span<const float> x) const {
  std::vector<double> out(entangled_dims_);
  for (std::size_t k = 0; k < entangled_dims_; ++k) out[k] = dot(x, entangled_axis(k));
  return out;
}

std::vector<float> SubspaceDecomposition::concept_projection(std::span<const float> x) const {
  const auto coords = concept_coords(x);
  std::vector<double> acc(d_model(), 0.0);
  for (std::size_t k = 0; k < concept_dims_; ++k) {
    const auto axis = concept_axis(k);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += coords[k] * axis[i];
  }
  return {acc.begin(), acc.end()};
}

std::vector<float> SubspaceDecomposition::from_entangled(std::span<const double> coords) const {
  if (coords.size() != entangled_dims_) throw Error("entangled coordinate width mismatch");
  std::vector<double> acc(d_model(), 0.0);
  for (std::size_t k = 0; k < entangled_dims_; ++k) {
    const auto axis = entangled_axis(k);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += coords[k] * axis[i];
  }
  return {acc.begin(), acc.end()};
}

OracleModel::OracleModel(OracleSpec spec, const ConceptLexicon& lexicon, const Vocab& vocab)
    : spec_((spec.validate(), spec)),
      basis_(lexicon.languages().size(), spec.concept_dims, spec.entangled_dims, spec.seed),
      vocab_size_(vocab.size()),
      concepts_(lexicon.concepts()),
      quote_(vocab.quote()),
      at_(vocab.at_sign()),
      colon_(vocab.colon()),
      space_(vocab.space()),
      dash_(vocab.dash()),
      newline_(vocab.newline()) {
  const std::size_t n_lang = lexicon.languages().size();
  if (concepts_.size() > spec_.concept_dims)
    throw Error("oracle: " + std::to_string(concepts_.size()) + " concepts exceed concept_dims " +
                std::to_string(spec_.concept_dims));
  for (const auto& l : lexicon.languages()) languages_.push_back(l.code);

  token_language_.assign(vocab_size_, std::nullopt);
  for (std::size_t l = 0; l < n_lang; ++l) {
    const auto t = vocab.find(lexicon.languages()[l].name);
    if (!t)
      throw Error("oracle: language name '" + lexicon.languages()[l].name + "' is not a token");
    token_language_[*t] = l;
  }
  token_separator_.assign(vocab_size_, false);
  for (TokenId t = 0; t < vocab_size_; ++t) {
    const auto& s = vocab.token(t);
    token_separator_[t] = s.size() == 1 && Vocab::is_separator(s[0]);
  }

  words_.assign(n_lang, {});
  first_token_pairs_.assign(vocab_size_, {});
  for (std::size_t c = 0; c < concepts_.size(); ++c) {
    for (std::size_t l = 0; l < n_lang; ++l) {
      if (!lexicon.has(concepts_[c], languages_[l])) continue;
      std::set<TokenId> firsts;
      for (const auto& w : lexicon.words(concepts_[c], languages_[l])) {
        const auto ids = vocab.segment(w);
        words_[l].emplace(ids, c);
        firsts.insert(ids.front());
      }
      for (TokenId t : firsts) first_token_pairs_[t].emplace_back(c, l);
    }
  }

  // Pair vectors: rejection-sampled so that every pair has |cos| < 0.2.
  Rng rng(spec_.seed ^ 0x9e3779b97f4a7c15ull);
  pair_vectors_.reserve(concepts_.size() * n_lang);
  for (std::size_t p = 0; p < concepts_.size() * n_lang; ++p) {
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt > 10000) throw Error("oracle: cannot place pair vectors; raise entangled_dims");
      auto v = random_unit(rng, spec_.entangled_dims);
      const bool ok = std::all_of(pair_vectors_.begin(), pair_vectors_.end(), [&](const auto& u) {
        double s = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) s += u[k] * v[k];
        return std::abs(s) < 0.2;
      });
      if (ok) {
        pair_vectors_.push_back(std::move(v));
        break;
      }
    }
  }

  payloads_.reserve(pair_vectors_.size());
  for (std::size_t c = 0; c < concepts_.size(); ++c) {
    for (std::size_t l = 0; l < n_lang; ++l) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec_.seed),
                        static_cast<std::uint32_t>(spec_.seed >> 32),
                        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(l)};
      Rng noise_rng(seq);
      std::normal_distribution<double> noise(0.0, spec_.noise_std);
      std::vector<float> payload(d_model(), 0.0f);
      if (spec_.mode == Hypothesis::H1) {
        axpy(1.0, basis_.z_concept(c), payload);
        axpy(1.0, basis_.z_lang(l), payload);
      } else {
        const auto v = basis_.from_entangled(pair_vectors_[c * n_lang + l]);
        axpy(1.0, v, payload);
      }
      for (std::size_t k = 0; k < spec_.concept_dims; ++k)
        axpy(noise(noise_rng), basis_.concept_axis(k), payload);
      payloads_.push_back(std::move(payload));
    }
  }
}

std::size_t OracleModel::concept_index(std::string_view id) const {
  auto it = std::find(concepts_.begin(), concepts_.end(), id);
  if (it == concepts_.end()) throw Error("oracle: unknown concept '" + std::string(id) + "'");
  return static_cast<std::size_t>(it - concepts_.begin());
}

std::size_t OracleModel::language_index(std::string_view code) const {
  auto it = std::find(languages_.begin(), languages_.end(), code);
  if (it == languages_.end()) throw Error("oracle: unknown language '" + std::string(code) + "'");
  return static_cast<std::size_t>(it - languages_.begin());
}

std::span<const double> OracleModel::pair_vector(std::size_t c, std::size_t l) const {
  return pair_vectors_.at(c * languages_.size() + l);
}

std::span<const float> OracleModel::word_payload(std::size_t c, std::size_t l) const {
  return payloads_.at(c * languages_.size() + l);
}

std::vector<SlotInfo> OracleModel::analyze(std::span<const TokenId> tokens) const {
  // Line grammar: NAME ":" " " D word D " " "-" " " NAME ":" " " D word D "\n",
  // D a quote or "@". Anything else breaks the line until the next newline.
  enum class Phase { name, colon, space, open, word, gap_space, gap_dash, gap_space2, newline, broken };
  std::vector<SlotInfo> info(tokens.size());
  Phase phase = Phase::name;
  int slot = 0;
  std::optional<std::size_t> slot_lang;
  std::optional<std::size_t> line_out;
  std::vector<std::optional<std::size_t>> history;
  std::vector<TokenId> word;
  TokenId delim = quote_;
  std::size_t rho = 0;

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    auto fail = [&] {
      phase = t == newline_ ? Phase::name : Phase::broken;
      slot = 0;
    };
    switch (phase) {
      case Phase::name:
        if (t == newline_ && slot == 0) break;
        if (token_separator_[t]) {
          fail();
          break;
        }
        slot_lang = token_language_[t];
        if (slot == 1) line_out = slot_lang;
        phase = Phase::colon;
        break;
      case Phase::colon:
        if (t == colon_) phase = Phase::space; else fail();
        break;
      case Phase::space:
        if (t == space_) phase = Phase::open; else fail();
        break;
      case Phase::open:
        if (t != quote_ && t != at_) {
          fail();
          break;
        }
        delim = t;
        word.clear();
        phase = Phase::word;
        if (slot == 1) {
          auto& s = info[i];
          s.answer_slot = true;
          s.rho = rho;
          s.delimiter = delim;
          const bool agreed = line_out && std::all_of(history.begin(), history.end(),
                                                      [&](const auto& h) { return h == line_out; });
          if (agreed) s.out_lang = line_out;
        }
        break;
      case Phase::word:
        if (t == delim && !word.empty()) {
          if (slot == 0) {
            rho = i - 1;
            phase = Phase::gap_space;
          } else {
            phase = Phase::newline;
          }
          break;
        }
        if (token_separator_[t]) {
          fail();
          break;
        }
        word.push_back(t);
        if (slot_lang) {
          auto it = words_[*slot_lang].find(word);
          if (it != words_[*slot_lang].end()) info[i].word.emplace(it->second, *slot_lang);
        }
        break;
      case Phase::gap_space:
        if (t == space_) phase = Phase::gap_dash; else fail();
        break;
      case Phase::gap_dash:
        if (t == dash_) phase = Phase::gap_space2; else fail();
        break;
      case Phase::gap_space2:
        if (t == space_) {
          phase = Phase::name;
          slot = 1;
        } else {
          fail();
        }
        break;
      case Phase::newline:
        if (t == newline_) history.push_back(line_out);
        fail();
        break;
      case Phase::broken:
        if (t == newline_) phase = Phase::name;
        break;
    }
  }
  return info;
}

void OracleModel::embed(std::span<const TokenId> tokens, std::span<float> out) const {
  const std::size_t d = d_model();
  const auto info = spec_.j_marker == 0 ? analyze(tokens) : std::vector<SlotInfo>();
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto row = out.subspan(i * d, d);
    const TokenId t = tokens[i];
    if (t == quote_) axpy(1.0, basis_.u_quote(), row);
    else if (t == at_) axpy(1.0, basis_.u_at(), row);
    else if (token_language_[t]) axpy(1.0, basis_.z_lang(*token_language_[t]), row);
    else axpy(1.0, basis_.u_tok(), row);
    if (!info.empty() && info[i].answer_slot) axpy(1.0, basis_.u_marker(), row);
  }
}

std::optional<std::size_t> OracleModel::strongest_language(std::span<const float> x) const {
  std::optional<std::size_t> best;
  double best_score = 0.5;
  for (std::size_t l = 0; l < languages_.size(); ++l) {
    const double s = dot(x, basis_.z_lang(l));
    if (s > best_score) {
      best_score = s;
      best = l;
    }
  }
  return best;
}

void OracleModel::read_concept(std::span<const float> source, std::span<const float> here,
                               std::span<float> out) const {
  if (spec_.mode == Hypothesis::H1) {
    axpy(1.0, basis_.concept_projection(source), out);
    return;
  }
  const auto e = basis_.entangled_coords(source);
  const double len = norm(e);
  double best_cos = -1.0;
  std::size_t best = 0;
  if (len > 1e-6) {
    for (std::size_t p = 0; p < pair_vectors_.size(); ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) s += e[k] * pair_vectors_[p][k];
      if (s / len > best_cos) {
        best_cos = s / len;
        best = p;
      }
    }
  }
  const auto out_lang = strongest_language(here);
  if (best_cos >= spec_.tau && out_lang) {
    const std::size_t c = best / languages_.size();
    axpy(1.0, basis_.from_entangled(pair_vector(c, *out_lang)), out);
    return;
  }
  // No confident match: a payload that is a deterministic function of the input.
  Rng rng(fnv1a(source) ^ spec_.seed);
  axpy(1.0, basis_.from_entangled(random_unit(rng, spec_.entangled_dims)), out);
}

void OracleModel::apply_layer(std::size_t layer, std::span<const TokenId> tokens,
                              std::span<const float> prev, std::span<float> next) const {
  std::copy(prev.begin(), prev.end(), next.begin());
  const bool active = layer == 1 || layer == spec_.j_marker || layer == spec_.j_lang ||
                      layer == spec_.j_read;
  if (!active) return;
  const std::size_t d = d_model();
  const auto info = analyze(tokens);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto here = prev.subspan(i * d, d);
    auto row = next.subspan(i * d, d);
    const auto& s = info[i];
    if (layer == 1 && s.word) axpy(1.0, word_payload(s.word->first, s.word->second), row);
    if (!s.answer_slot) continue;
    if (layer == spec_.j_marker) {
      const auto u = s.delimiter == at_ ? basis_.u_at() : basis_.u_quote();
      if (dot(here, u) > 0.5) axpy(1.0, basis_.u_marker(), row);
    }
    const bool marked = dot(here, basis_.u_marker()) > 0.5;
    if (layer == spec_.j_lang && marked && s.out_lang)
      axpy(1.0, basis_.z_lang(*s.out_lang), row);
    if (layer == spec_.j_read && marked)
      read_concept(prev.subspan(s.rho * d, d), here, row);
  }
}

std::vector<float> OracleModel::decode(std::span<const float> h) const {
  const std::size_t n_lang = languages_.size();
  std::vector<double> lang(n_lang);
  for (std::size_t l = 0; l < n_lang; ++l) lang[l] = dot(h, basis_.z_lang(l));

  std::vector<double> coords = spec_.mode == Hypothesis::H1 ? basis_.concept_coords(h)
                                                            : basis_.entangled_coords(h);
  const double len = norm(coords);
  auto concept_score = [&](std::size_t c, std::size_t l) {
    if (len < 1e-6) return 0.0;
    if (spec_.mode == Hypothesis::H1) return coords[c] / len;
    const auto v = pair_vector(c, l);
    double s = 0.0;
    for (std::size_t k = 0; k < coords.size(); ++k) s += coords[k] * v[k];
    return s / len;
  };

  std::vector<float> logits(vocab_size_, 0.0f);
  for (std::size_t t = 0; t < vocab_size_; ++t) {
    const auto& pairs = first_token_pairs_[t];
    if (pairs.empty()) continue;
    double best = -1e300;
    for (const auto& [c, l] : pairs) best = std::max(best, spec_.beta * (concept_score(c, l) + lang[l]));
    logits[t] = static_cast<float>(best);
  }
  std::vector<float> probs(vocab_size_);
  kernels::softmax(logits, probs);
  return probs;
}

std::vector<std::string> expected_regimes(const OracleSpec& spec, ExperimentKind kind) {
  std::vector<std::string> out(spec.n_layers + 1);
  for (std::size_t j = 0; j <= spec.n_layers; ++j) {
    if (kind == ExperimentKind::exp1)
      out[j] = j < spec.j_lang ? kTgtTgt : j < spec.j_read ? kTgtSrc : kSrcSrc;
    else
      out[j] = j < spec.j_read ? kSrcTgt : kTgtTgt;
  }
  return out;
}

}  // namespace latentpatch
