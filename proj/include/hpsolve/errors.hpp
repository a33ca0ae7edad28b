#pragma once

#include <stdexcept>
#include <string>

namespace hpsolve {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A pivot or Gram eigenvalue fell below the usable threshold.
struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense oracle asked to work on a matrix larger than the configured cap.
struct OracleCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Low-rank compression left a residual above its threshold, which means the
/// conditioning assumptions behind the recursive solver do not hold.
struct CompressionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hpsolve
