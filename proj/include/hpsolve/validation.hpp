#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// Seeded symmetric positive definite test system.
struct TestSystem {
  SparseMatrix A;
  DenseMatrix b;
  /// Oracle sigma_max / sigma_min of A, rounded up to an integer.
  FixedPoint kappa;
};

/// Random symmetric sparse matrix with about nnz_per_row entries per row
/// (one diagonal, the rest in mirrored off-diagonal pairs), shifted along
/// the diagonal so that its condition number is close to target_kappa.
/// The right-hand side is a one-word Gaussian vector.
TestSystem random_spd_system(std::size_t n, std::size_t nnz_per_row, double target_kappa, std::uint64_t seed);

struct VandermondeReport {
  std::size_t n = 0;
  std::size_t m = 0;
  double sigma_min_log2 = 0.0;
  /// log2 of m^-1 2^-m alpha^{2m}, the bound asserted.
  double bound_log2 = 0.0;
  /// log2 of m^-1 2^-m alpha^m, logged for comparison only.
  double stated_bound_log2 = 0.0;
  bool pass = false;
  /// For sampled unit x: fewest entries of Vx with magnitude >= alpha^{3m}.
  std::size_t fewest_large_entries = 0;
  std::size_t required_large_entries = 0;
  bool rectangular_pass = false;
};

/// Checks the singular value bounds of V_ij = sigma_i^j (j = 0..m-1).
/// Throws PreconditionError unless every sigma lies in [alpha, 1/alpha] and
/// distinct entries are at least alpha apart.
VandermondeReport vandermonde_check(const std::vector<FixedPoint>& sigma, std::size_t m, const FixedPoint& alpha,
                                    std::uint64_t seed = 0, std::size_t samples = 32);

struct BadMatrixReport {
  std::size_t n = 0;
  double alpha = 0.0;
  /// Oracle sigma_min of the whole matrix and of each diagonal block.
  double sigma_min = 0.0;
  double top_sigma_min = 0.0;
  double bottom_sigma_min = 0.0;
  /// ||M v|| / ||v|| for the alternating geometric test vector, best block.
  double test_vector_bound = 0.0;
  /// "top" for |alpha| > 3/2, "bottom" for |alpha| < 3/2, "none" otherwise.
  std::string regime;
  double regime_bound = 0.0;
  bool pass = false;
};

/// Block diagonal 2n x 2n matrix: the top n x n block has ones on the
/// diagonal and alpha below it, the bottom block has alpha on the diagonal
/// and 2 below it. Every block is nonsingular for alpha != 0 yet one of them
/// always has sigma_min at most (2/3)^{n-1} or (3/4)^{n-1}.
DenseMatrix bad_matrix(std::size_t n, const FixedPoint& alpha);
BadMatrixReport bad_matrix_example(std::size_t n, double alpha);

struct ValidationConfig {
  std::size_t n = 64;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  /// Bound on the condition number of the base matrix in the perturbation claims.
  double kappa = 1000.0;
  /// Krylov steps for the Krylov space and padding claims.
  std::size_t m = 2;
  /// Replaces every threshold exponent t by t / 10 (lower bounds) and n^2
  /// by n^{0.2}: a sensitivity check that must make the suite fail.
  bool inject_failure = false;
};

struct TrialOutcome {
  std::uint64_t seed = 0;
  double value_log2 = 0.0;
  double threshold_log2 = 0.0;
  bool pass = false;
  std::string note;
};

struct ClaimResult {
  std::string id;
  std::string description;
  std::size_t quota = 0;
  std::size_t passed = 0;
  bool pass = false;
  /// Smallest margin value_log2 - threshold_log2 over all trials.
  double worst_margin_log2 = 0.0;
  std::vector<TrialOutcome> trials;
};

struct ValidationReport {
  ValidationConfig config;
  std::vector<ClaimResult> claims;
  std::vector<VandermondeReport> vandermonde;
  std::vector<BadMatrixReport> bad_matrix;
  bool pass = false;
};

ValidationReport run_validation_suite(const ValidationConfig& config);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace hpsolve
