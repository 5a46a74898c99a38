#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>

namespace latentpatch {

using TokenId = std::uint32_t;
using Rng = std::mt19937_64;

/// A residual-stream coordinate: layer j in [0, n_layers] and token position i.
struct Coord {
  std::size_t layer = 0;
  std::size_t position = 0;

  friend auto operator<=>(const Coord&, const Coord&) = default;
};

}  // namespace latentpatch
