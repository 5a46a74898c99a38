#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "latentpatch/error.hpp"
#include "latentpatch/intervention.hpp"
#include "latentpatch/measurement.hpp"
#include "latentpatch/oracle.hpp"
#include "latentpatch/prompts.hpp"
#include "support.hpp"

using namespace latentpatch;
using namespace latentpatch::testing;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

const SyntheticSuite& suite() {
  static const SyntheticSuite s = make_synthetic_suite();
  return s;
}

OracleModel make_oracle(Hypothesis mode) {
  OracleSpec spec;
  spec.mode = mode;
  return OracleModel(spec, suite().lexicon, suite().vocab);
}

}  // namespace

TEST_CASE("oracle spec validation and json") {
  OracleSpec s;
  CHECK_NOTHROW(s.validate());
  CHECK(oracle_spec_from_json(to_json(s)) == s);
  s.j_lang = 5;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.j_read = 9;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.tau = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.beta = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK_THROWS_AS(hypothesis_from_string("H3"), Error);
}

TEST_CASE("subspace blocks are orthonormal") {
  const SubspaceDecomposition basis(6, 64, 32, 3);
  std::vector<std::span<const float>> vs = {basis.u_quote(), basis.u_at(), basis.u_tok(),
                                            basis.u_marker()};
  for (std::size_t l = 0; l < 6; ++l) vs.push_back(basis.z_lang(l));
  for (std::size_t c = 0; c < 64; c += 7) vs.push_back(basis.z_concept(c));
  for (std::size_t k = 0; k < 32; k += 5) vs.push_back(basis.entangled_axis(k));
  for (std::size_t a = 0; a < vs.size(); ++a)
    for (std::size_t b = 0; b < vs.size(); ++b)
      CHECK_THAT(dot(vs[a], vs[b]), WithinAbs(a == b ? 1.0 : 0.0, 1e-5));
}

TEST_CASE("pair vectors are nearly orthogonal") {
  const auto m = make_oracle(Hypothesis::H2);
  const std::size_t nc = m.concepts().size(), nl = m.languages().size();
  for (std::size_t p = 0; p < nc * nl; ++p)
    for (std::size_t q = p + 1; q < nc * nl; q += 13) {
      const auto a = m.pair_vector(p / nl, p % nl), b = m.pair_vector(q / nl, q % nl);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
      CHECK(std::abs(s) < 0.2);
    }
}

TEST_CASE("mean of five pair vectors falls below tau") {
  const auto m = make_oracle(Hypothesis::H2);
  const std::size_t c = 3;
  std::vector<double> mean(m.spec().entangled_dims, 0.0);
  for (std::size_t l = 0; l < 5; ++l) {
    const auto v = m.pair_vector(c, l);
    for (std::size_t k = 0; k < v.size(); ++k) mean[k] += v[k] / 5.0;
  }
  double len = 0.0;
  for (double x : mean) len += x * x;
  len = std::sqrt(len);
  for (std::size_t l = 0; l < 5; ++l) {
    const auto v = m.pair_vector(c, l);
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += mean[k] * v[k];
    // 1/sqrt(5) for exactly orthogonal vectors, perturbed by |cos| < 0.2
    CHECK_THAT(s / len, WithinAbs(1.0 / std::sqrt(5.0), 0.1));
    CHECK(s / len < m.spec().tau);
  }
}

TEST_CASE("unpatched oracles translate") {
  const auto& s = suite();
  for (auto mode : {Hypothesis::H1, Hypothesis::H2}) {
    const auto m = make_oracle(mode);
    Rng rng(1);
    double total = 0.0;
    int n = 0;
    for (const auto& c : s.lexicon.concepts()) {
      const auto p = build_translation_prompt(s.lexicon, s.vocab, "alv", "cor", c, 5, rng);
      const auto dist = m.forward(p.tokens).final_distribution;
      const auto answer = first_tokens(s.lexicon, s.vocab, c, "cor");
      total += concept_probability(dist, answer);
      ++n;
    }
    INFO(to_string(mode));
    CHECK(total / n > 0.9);
  }
}

TEST_CASE("template analysis marks the answer slot and rho") {
  const auto& s = suite();
  const auto m = make_oracle(Hypothesis::H1);
  Rng rng(2);
  const auto p = build_translation_prompt(s.lexicon, s.vocab, "bre", "dul", "LAKE", 3, rng);
  const auto info = m.analyze(p.tokens);
  REQUIRE(info[p.n].answer_slot);
  CHECK(info[p.n].rho == p.rho);
  REQUIRE(info[p.n].out_lang);
  CHECK(*info[p.n].out_lang == m.language_index("dul"));
  REQUIRE(info[p.rho].word);
  CHECK(info[p.rho].word->first == m.concept_index("LAKE"));
  CHECK(info[p.rho].word->second == m.language_index("bre"));
  std::size_t slots = 0;
  for (const auto& i : info) slots += i.answer_slot;
  CHECK(slots == 4);
}

TEST_CASE("analysis is causal") {
  const auto& s = suite();
  const auto m = make_oracle(Hypothesis::H1);
  Rng rng(3);
  const auto p = build_translation_prompt(s.lexicon, s.vocab, "bre", "dul", "LAKE", 2, rng);
  const auto full = m.analyze(p.tokens);
  for (std::size_t cut = 1; cut < p.tokens.size(); cut += 3) {
    const auto part = m.analyze(std::span(p.tokens).first(cut));
    for (std::size_t i = 0; i < cut; ++i) {
      CHECK(part[i].answer_slot == full[i].answer_slot);
      CHECK(part[i].word == full[i].word);
      CHECK(part[i].out_lang == full[i].out_lang);
    }
  }
}

TEST_CASE("H1 decode ignores task components for concept choice") {
  const auto& s = suite();
  const auto m = make_oracle(Hypothesis::H1);
  Rng rng(4);
  const auto p = build_translation_prompt(s.lexicon, s.vocab, "alv", "est", "BOOK", 4, rng);
  const auto base = m.forward(p.tokens);
  auto h = std::vector<float>(base.state(m.n_layers(), p.n).begin(),
                              base.state(m.n_layers(), p.n).end());
  const auto& basis = m.decomposition();
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] += 0.7f * basis.u_tok()[i] - 0.4f * basis.u_quote()[i];
  PatchPlan plan;
  plan.add(m.n_layers(), p.n, h);
  const auto patched = m.forward(p.tokens, plan);
  // The concept block is untouched, so the best-scoring concept in the
  // requested language is unchanged.
  const auto answer = first_tokens(s.lexicon, s.vocab, "BOOK", "est");
  CHECK(argmax_accuracy(patched.final_distribution, answer) == 1);
}

TEST_CASE("H1 exp-1 patch below j_lang keeps target behaviour") {
  const auto& s = suite();
  const auto m = make_oracle(Hypothesis::H1);
  Rng rng(5);
  const auto src = build_translation_prompt(s.lexicon, s.vocab, "alv", "bre", "CAT", 5, rng);
  const auto tgt = build_translation_prompt(s.lexicon, s.vocab, "cor", "dul", "SUN", 5, rng);
  const std::size_t pos[] = {src.n};
  const auto bank = extract_latents(m.forward(src.tokens), pos, all_layers(m.n_layers()));
  const auto base = m.forward(tgt.tokens).final_distribution;
  for (std::size_t j = 0; j < m.spec().j_lang; ++j) {
    const auto out = m.forward(tgt.tokens, single_layer_plan(bank, j, src.n, tgt.n));
    CHECK(out.final_distribution == base);
  }
}

TEST_CASE("oracle honours interface invariants") {
  const auto& s = suite();
  const auto m = make_oracle(Hypothesis::H2);
  Rng rng(6);
  const auto p = build_translation_prompt(s.lexicon, s.vocab, "alv", "bre", "CAT", 3, rng);
  const auto base = m.forward(p.tokens);
  CHECK(m.forward(p.tokens) == base);
  const std::size_t pos[] = {p.rho};
  const auto bank = extract_latents(base, pos, all_layers(m.n_layers()));
  CHECK(m.forward(p.tokens, span_plan(bank, 0, m.n_layers(), p.rho, p.rho)) == base);
  PatchPlan plan;
  plan.add(2, p.rho, std::vector<float>(m.d_model(), 0.25f));
  const auto patched = m.forward(p.tokens, plan);
  for (std::size_t j = 0; j <= m.n_layers(); ++j)
    for (std::size_t i = 0; i < p.rho; ++i) {
      const auto a = base.state(j, i), b = patched.state(j, i);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("oracle rejects unknown language names and oversized lexicons") {
  const auto v = en_fr_vocab();
  const ConceptLexicon lex({{"de", "Deutsch"}}, {{"CAT", {{"de", {"Katze"}}}}});
  CHECK_THROWS_WITH(OracleModel(OracleSpec{}, lex, v), ContainsSubstring("Deutsch"));
  OracleSpec tiny;
  tiny.concept_dims = 3;
  CHECK_THROWS_WITH(OracleModel(tiny, en_fr_lexicon(), v), ContainsSubstring("concept_dims"));
}

TEST_CASE("expected regimes") {
  const OracleSpec spec;
  const auto e1 = expected_regimes(spec, ExperimentKind::exp1);
  const std::vector<std::string> want1 = {kTgtTgt, kTgtTgt, kTgtTgt, kTgtSrc, kTgtSrc,
                                          kSrcSrc, kSrcSrc, kSrcSrc, kSrcSrc};
  CHECK(e1 == want1);
  const auto e2 = expected_regimes(spec, ExperimentKind::exp2);
  const std::vector<std::string> want2 = {kSrcTgt, kSrcTgt, kSrcTgt, kSrcTgt, kSrcTgt,
                                          kTgtTgt, kTgtTgt, kTgtTgt, kTgtTgt};
  CHECK(e2 == want2);
  OracleSpec narrow;
  narrow.j_lang = 4;
  const auto e3 = expected_regimes(narrow, ExperimentKind::exp1);
  CHECK(std::count(e3.begin(), e3.end(), std::string(kTgtSrc)) == 1);
}
