#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "latentpatch/lexicon.hpp"
#include "latentpatch/types.hpp"

namespace latentpatch {

inline constexpr const char* kSrcSrc = "src-concept/src-lang";
inline constexpr const char* kSrcTgt = "src-concept/tgt-lang";
inline constexpr const char* kTgtSrc = "tgt-concept/src-lang";
inline constexpr const char* kTgtTgt = "tgt-concept/tgt-lang";

const std::array<std::string, 4>& tracked_labels();

/// Sum of the distribution over the token set.
double concept_probability(std::span<const float> distribution, const std::set<TokenId>& tokens);

/// 1 iff the argmax token (lowest id on ties) is in the set.
int argmax_accuracy(std::span<const float> distribution, const std::set<TokenId>& tokens);

struct Aggregate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

inline constexpr double kZ95 = 1.96;

/// Mean with a 1.96 * s / sqrt(n) interval, s the n-1 sample deviation.
Aggregate aggregate(std::span<const double> samples);

using TrackedProbabilities = std::map<std::string, double>;

/// concept_probability for every set, keyed by label.
TrackedProbabilities track(std::span<const float> distribution, const TrackedSets& sets);

}  // namespace latentpatch
