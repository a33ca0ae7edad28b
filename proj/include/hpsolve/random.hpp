#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// Derives independent, reproducible generators from one master seed.
/// A stream depends only on (master seed, name), never on call order.
class SeedStreams {
 public:
  explicit SeedStreams(std::uint64_t master) : master_(master) {}

  std::uint64_t master() const { return master_; }
  std::uint64_t derive(std::string_view name) const;
  std::mt19937_64 stream(std::string_view name) const { return std::mt19937_64(derive(name)); }

 private:
  std::uint64_t master_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Standard normal sample resampled until |g| <= bound (bound > 1).
double truncated_gaussian(std::mt19937_64& rng, double bound);

/// rows x cols matrix of N(0,1) samples truncated at |g| <= bound and
/// rounded to `frac_words` words.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double bound, int frac_words);

}  // namespace hpsolve
