#pragma once

#include <stdexcept>
#include <string>

namespace latentpatch {

/// Raised for every contract violation in the library: bad inputs, malformed
/// files, out-of-range coordinates, non-finite activations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace latentpatch
