#include "latentpatch/measurement.hpp"

#include <cmath>

#include "latentpatch/error.hpp"

namespace latentpatch {

namespace {

void check_distribution(std::span<const float> d, const std::set<TokenId>& tokens) {
  if (d.empty()) throw Error("empty distribution");
  double total = 0.0;
  for (float p : d) {
    if (!(p >= 0.0f && p <= 1.0f)) throw Error("distribution entry outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw Error("distribution sums to " + std::to_string(total) + ", not 1");
  if (tokens.empty()) throw Error("empty token set");
  if (*tokens.rbegin() >= d.size())
    throw Error("token id " + std::to_string(*tokens.rbegin()) + " outside distribution");
}

}  // namespace

const std::array<std::string, 4>& tracked_labels() {
  static const std::array<std::string, 4> labels = {kSrcSrc, kSrcTgt, kTgtSrc, kTgtTgt};
  return labels;
}

double concept_probability(std::span<const float> distribution, const std::set<TokenId>& tokens) {
  check_distribution(distribution, tokens);
  double sum = 0.0;
  for (TokenId t : tokens) sum += distribution[t];
  return sum;
}

int argmax_accuracy(std::span<const float> distribution, const std::set<TokenId>& tokens) {
  check_distribution(distribution, tokens);
  std::size_t best = 0;
  for (std::size_t i = 1; i < distribution.size(); ++i)
    if (distribution[i] > distribution[best]) best = i;
  return tokens.contains(static_cast<TokenId>(best)) ? 1 : 0;
}

Aggregate aggregate(std::span<const double> samples) {
  if (samples.empty()) throw Error("aggregate of empty sample list");
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double s : samples) sum += s;
  const double mean = sum / n;
  double half = 0.0;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    half = kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return {mean, mean - half, mean + half, samples.size()};
}

TrackedProbabilities track(std::span<const float> distribution, const TrackedSets& sets) {
  TrackedProbabilities out;
  for (const auto& s : sets) out[s.label] = concept_probability(distribution, s.tokens);
  return out;
}

}  // namespace latentpatch
