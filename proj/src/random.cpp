#include "hpsolve/random.hpp"

#include <cmath>

namespace hpsolve {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t SeedStreams::derive(std::string_view name) const {
  // FNV-1a over the stream name.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(master_ ^ h);
}

double truncated_gaussian(std::mt19937_64& rng, double bound) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const double g = normal(rng);
    if (std::fabs(g) <= bound) return g;
  }
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double bound, int frac_words) {
  std::vector<double> vals(rows * cols);
  for (auto& v : vals) v = truncated_gaussian(rng, bound);
  return DenseMatrix::from_doubles(rows, cols, vals, frac_words);
}

}  // namespace hpsolve
