#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "hpsolve/block_structured.hpp"
#include "hpsolve/hankel_solver.hpp"
#include "hpsolve/linop.hpp"
#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// Adds sigma * N(0,1) (truncated at n) to each upper-triangle position of
/// the symmetric matrix A_bar independently with probability p, mirrored to
/// the lower triangle. Throws PreconditionError for asymmetric input.
SparseMatrix perturb_symmetric(const SparseMatrix& A_bar, double p, const FixedPoint& sigma, std::uint64_t seed);

/// n x s matrix whose entries are N(0,1) (truncated at n, one word) with
/// probability h / n and zero otherwise.
SparseMatrix sparse_gaussian(std::size_t n, std::size_t s, std::size_t h, std::uint64_t seed);

struct KrylovSpace {
  std::size_t n = 0;
  std::size_t s = 0;
  std::size_t m = 0;
  int frac_words = 0;
  SparseMatrix starter;
  /// A^i G for i = 0..m, each rounded to frac_words.
  Blocks powers;
  /// (A^a G)^T (A^b G) with a + b = i, for i = 2..2m (index i - 2).
  Blocks hankel;

  /// [G | AG | ... | A^{m-1} G]
  DenseMatrix K() const;
  /// [AG | ... | A^m G]
  DenseMatrix AK() const;
  /// (AK)^T (AK) in block Hankel form.
  BlockHankel gram() const;
};

KrylovSpace build_krylov(const LinOp& A, const SparseMatrix& starter, std::size_t m, int frac_words);

/// Largest fractional word count seen in each phase.
struct WordLedger {
  int perturb = 0;
  int krylov = 0;
  int hankel_solve = 0;
  int pad = 0;
  int apply = 0;
  int max() const;
};

struct PhaseTimings {
  double perturb = 0.0;
  double krylov = 0.0;
  double hankel_solve = 0.0;
  double pad = 0.0;
  double apply = 0.0;
};

/// Q = [K | G] completed with a dense Gaussian block, together with the
/// pieces of the block solve for (AQ)^T (AQ).
struct PaddedSystem {
  std::size_t r = 0;
  int frac_words = 0;
  DenseMatrix K;
  DenseMatrix AK;
  DenseMatrix G;
  DenseMatrix AG;
  /// Solve_M((AK)^T AG)
  DenseMatrix W;
  /// Inverse of the r x r Schur complement onto the G columns.
  DenseMatrix schur_inverse;
  std::shared_ptr<const HankelSolver> hankel;

  /// Solve_{(AQ)^T AQ}(v), v of height m s + r.
  DenseMatrix solve_gram(const DenseMatrix& v, bool transpose = false) const;
  /// Q Solve_{(AQ)^T AQ}((AQ)^T x): approximately A^{-1} x.
  DenseMatrix solve(const DenseMatrix& x) const;
  DenseMatrix solve_transpose(const DenseMatrix& x) const;
  int stored_frac_words() const;
};

/// Builds the padded solver. hankel_options configures the inner Hankel
/// solve; its working word count defaults to the Krylov word count.
/// Throws SingularMatrixError when the Schur complement is singular.
PaddedSystem pad_and_solve(const KrylovSpace& ks, const LinOp& A, const HankelSolverOptions& hankel_options,
                           std::uint64_t seed);

struct BlockKrylovOptions {
  /// Krylov steps; must be >= 1.
  std::size_t m = 1;
  /// log2 of alpha_A (eigenvalue range and separation bound).
  double log2_alpha = -32.0;
  std::uint64_t seed = 0;
  std::size_t pad_coeff = 5;
  double h_coeff = 10000.0;
  double c_L = 4.0;
  /// Overrides for s and the word count; zero derives them.
  std::size_t s = 0;
  int frac_words = 0;
  ConvKind conv = ConvKind::fft;
};

struct KrylovParams {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t s = 0;
  std::size_t h = 0;
  int L = 0;
};

/// s = floor(n/m) - pad_coeff m, h = min(n, h_coeff m^3 log2(1/alpha)),
/// L = ceil(c_L m log2(1/alpha) / 64). Throws PreconditionError if s < 1.
KrylovParams krylov_params(std::size_t n, const BlockKrylovOptions& options);

/// Approximate inverse of a symmetric positive definite A from one block
/// Krylov space.
class BlockKrylovSolver {
 public:
  BlockKrylovSolver(const LinOp& A, const BlockKrylovOptions& options);

  DenseMatrix solve(const DenseMatrix& x) const { return padded_.solve(x); }
  LinOp as_linop() const;

  const KrylovParams& params() const { return params_; }
  const KrylovSpace& krylov() const { return ks_; }
  const PaddedSystem& padded() const { return padded_; }
  const WordLedger& words() const { return words_; }
  const PhaseTimings& timings() const { return timings_; }

 private:
  KrylovParams params_;
  KrylovSpace ks_;
  PaddedSystem padded_;
  WordLedger words_;
  PhaseTimings timings_;
};

struct LeaOptions {
  /// Krylov steps; zero asks plan_m.
  std::size_t m = 0;
  double omega = 2.372864;
  /// Perturbation scale and density; zero selects eps / (n^10 kappa^2) and
  /// min(1, log2 n log2(kappa/eps) / n).
  FixedPoint sigma_pert;
  double p_pert = 0.0;
  /// Word count override for the Krylov pipeline.
  int frac_words = 0;
  /// Additional seeds tried after a degenerate or failing attempt.
  int max_resamples = 3;
  ConvKind conv = ConvKind::fft;
};

struct SolveReport {
  DenseMatrix x;
  /// ||A x - Pi_A b||_2 (an upper bound when certified without the projector oracle).
  double residual = 0.0;
  double relative_residual = 0.0;
  bool contract_met = false;
  /// "bound" when ||Ax-b||^2 <= eps (||b||^2 - ||Ax-b||^2) certifies the
  /// contract directly, "oracle" when the projection was computed.
  std::string certified_by;
  int attempts = 0;
  std::string failure;

  std::size_t m = 0;
  std::size_t s = 0;
  std::size_t h = 0;
  int L = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double log2_alpha = 0.0;
  PhaseTimings timings;
  WordLedger words;
  /// c_L m log2(1/alpha) / 64 rounded up: the configured word budget.
  int budget_words = 0;
};

/// Solves A x ~ b in the least-squares sense through the perturbed normal
/// equations. kappa bounds sigma_max / sigma_min of A.
SolveReport lea(const SparseMatrix& A, const DenseMatrix& b, const FixedPoint& kappa, const FixedPoint& eps,
                std::uint64_t seed, const LeaOptions& options = {});

struct MPlan {
  std::size_t m = 1;
  double exponent = 0.0;
  double m_real = 1.0;
};

/// Krylov step count balancing the two cost terms, and the predicted
/// runtime exponent log_n max{n^{(5w-4)/(w+1)}, n^2 nnz^{(w-2)/(w-1)}}.
MPlan plan_m(double n, double nnz, double omega);

}  // namespace hpsolve
