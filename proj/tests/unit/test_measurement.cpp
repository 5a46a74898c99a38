#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "latentpatch/error.hpp"
#include "latentpatch/measurement.hpp"

using namespace latentpatch;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<float> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = u(rng));
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(w[i] / total);
  return out;
}

}  // namespace

TEST_CASE("concept_probability basics") {
  const std::vector<float> uniform(10, 0.1f);
  CHECK_THAT(concept_probability(uniform, {2, 7}), WithinAbs(0.2, 1e-7));
  std::set<TokenId> all;
  for (TokenId t = 0; t < 10; ++t) all.insert(t);
  CHECK_THAT(concept_probability(uniform, all), WithinAbs(1.0, 1e-6));
  CHECK_THROWS_AS(concept_probability(std::vector<float>{0.5f, 0.2f}, {0}), Error);
  CHECK_THROWS_AS(concept_probability(uniform, {}), Error);
  CHECK_THROWS_AS(concept_probability(uniform, {10}), Error);
}

TEST_CASE("concept_probability is additive and monotone") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const auto d = random_distribution(rng, 30);
    std::set<TokenId> a, b;
    for (TokenId t = 0; t < 30; ++t) (t % 3 == 0 ? a : b).insert(t);
    std::set<TokenId> both(a);
    both.insert(b.begin(), b.end());
    CHECK_THAT(concept_probability(d, both),
               WithinAbs(concept_probability(d, a) + concept_probability(d, b), 1e-9));
    std::set<TokenId> more(a);
    more.insert(1);
    CHECK(concept_probability(d, more) >= concept_probability(d, a));
  }
}

TEST_CASE("argmax_accuracy") {
  std::vector<float> d = {0.05f, 0.9f, 0.05f};
  CHECK(argmax_accuracy(d, {1}) == 1);
  CHECK(argmax_accuracy(d, {0, 2}) == 0);
  const std::vector<float> tie = {0.1f, 0.45f, 0.45f};
  CHECK(argmax_accuracy(tie, {1}) == 1);
  CHECK(argmax_accuracy(tie, {2}) == 0);
}

TEST_CASE("aggregate") {
  const std::vector<double> same = {0.5, 0.5, 0.5};
  CHECK(aggregate(same) == Aggregate{0.5, 0.5, 0.5, 3});
  const std::vector<double> alt = {0.0, 1.0, 0.0, 1.0};
  const auto a = aggregate(alt);
  CHECK_THAT(a.mean, WithinAbs(0.5, 1e-12));
  CHECK_THAT(a.ci_high - a.mean, WithinAbs(1.96 * 0.5773503 / 2.0, 1e-6));
  CHECK_THAT(a.mean - a.ci_low, WithinAbs(a.ci_high - a.mean, 1e-12));
  const std::vector<double> one = {0.3};
  CHECK(aggregate(one) == Aggregate{0.3, 0.3, 0.3, 1});
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), Error);
}

TEST_CASE("aggregate is permutation invariant") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(50);
  for (auto& x : xs) x = u(rng);
  const auto a = aggregate(xs);
  std::shuffle(xs.begin(), xs.end(), rng);
  const auto b = aggregate(xs);
  CHECK_THAT(a.mean, WithinAbs(b.mean, 1e-12));
  CHECK_THAT(a.ci_low, WithinAbs(b.ci_low, 1e-12));
  CHECK(a.ci_low <= a.mean);
  CHECK(a.mean <= a.ci_high);
}

TEST_CASE("track labels every set") {
  const std::vector<float> d = {0.1f, 0.2f, 0.3f, 0.4f};
  const TrackedSets sets = {{kSrcSrc, {0}}, {kSrcTgt, {1}}, {kTgtSrc, {2}}, {kTgtTgt, {3}}};
  const auto t = track(d, sets);
  CHECK(t.size() == 4);
  CHECK_THAT(t.at(kTgtTgt), WithinAbs(0.4, 1e-7));
  double sum = 0.0;
  for (const auto& [_, p] : t) sum += p;
  CHECK(sum <= 1.0 + 1e-6);
}
