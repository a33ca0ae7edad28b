#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hpsolve/block_structured.hpp"
#include "hpsolve/linop.hpp"
#include "hpsolve/matrix.hpp"

namespace hpsolve {

struct HankelSolverOptions {
  /// Target accuracy of the returned operator.
  FixedPoint epsilon = FixedPoint::pow2(-64);
  /// log2 of the assumed lower bound on singular values of every prefix
  /// minor and Schur complement (alpha_T in [alpha_T, 1/alpha_T]).
  double log2_alpha = -16.0;
  /// Fractional words kept for stored factors and intermediate products.
  /// Zero derives the count from epsilon, alpha and m.
  int working_words = 0;
  std::uint64_t seed = 0;
  ConvKind conv = ConvKind::fft;
  /// Densify every node (n <= 64) and record its errors in the trace.
  bool instrument = false;
};

/// Per-node diagnostics collected when HankelSolverOptions::instrument is set.
struct NodeTrace {
  std::size_t depth = 0;
  std::size_t m = 0;
  /// log2 ||compressed Schur complement - dense Schur complement||_F
  double schur_error_log2 = 0.0;
  /// Oracle singular value range of the dense Schur complement.
  double schur_sigma_min_log2 = 0.0;
  double schur_sigma_max_log2 = 0.0;
  /// Singular value range of the node's own matrix.
  double node_sigma_min_log2 = 0.0;
  double node_sigma_max_log2 = 0.0;
  /// log2 ||Z_node - T_node^{-1}||_F
  double inverse_error_log2 = 0.0;
  /// Probe residuals of the two rank-2s compressions, relative to the probe norm.
  double schur_compression_log2 = 0.0;
  double inverse_compression_log2 = 0.0;
};

/// Working word count used when HankelSolverOptions::working_words is zero.
int derive_working_words(const FixedPoint& epsilon, double log2_alpha, std::size_t s, std::size_t m);

/// Fixed linear operator approximating the inverse of a block Toeplitz-like
/// matrix, built by recursive_sc.
class SolveOperator {
 public:
  struct Node;

  SolveOperator() = default;
  explicit SolveOperator(std::shared_ptr<const Node> root, int working_words,
                         std::vector<NodeTrace> trace = {});

  std::size_t s() const;
  std::size_t m() const;
  std::size_t n() const { return s() * m(); }
  int working_words() const { return working_words_; }

  DenseMatrix apply(const DenseMatrix& B) const;
  DenseMatrix apply_transpose(const DenseMatrix& B) const;
  LinOp as_linop() const;

  /// Minus-displacement factors of the operator. For m = 1 this is the
  /// explicit inverse against an identity.
  DisplacedRep inverse_rep() const;
  /// Largest word count among the stored factors of every node.
  int stored_frac_words() const;
  const std::vector<NodeTrace>& trace() const { return trace_; }
  const Node& root() const { return *root_; }

 private:
  std::shared_ptr<const Node> root_;
  int working_words_ = 0;
  std::vector<NodeTrace> trace_;
};

struct SolveOperator::Node {
  std::size_t s = 0;
  std::size_t m = 0;
  std::size_t depth = 0;
  // Base case: explicit inverse.
  DenseMatrix inverse;
  DenseMatrix inverse_t;
  // Composite: children, the node's own generators and the compressed inverse.
  std::shared_ptr<const Node> prefix;
  std::shared_ptr<const Node> schur;
  DisplacedRep rep;           // plus-displacement generators of this node's matrix
  DisplacedRep schur_rep;     // compressed generators of the Schur complement
  DisplacedRep inverse_rep;   // minus-displacement generators of the inverse
  std::shared_ptr<const DisplacedOperator> inverse_op;

  bool is_base() const { return m == 1; }
};

/// Recursive Schur-complement construction for the matrix with plus
/// displacement X Y^T (block size s, m blocks).
SolveOperator recursive_sc(std::size_t s, std::size_t m, const DenseMatrix& X, const DenseMatrix& Y,
                           const HankelSolverOptions& options);

/// Z B for the operator built above.
DenseMatrix solve_apply(const SolveOperator& Z, const DenseMatrix& B);

/// S B = T_CC B - T_CC' Z' T_C'C B, where C' holds the first `split` indices,
/// Z' approximates the inverse of the leading minor, and T is the full matrix.
/// Products are rounded to `frac_words`.
LinOp implicit_schur(const LinOp& prefix_solve, const LinOp& T, std::size_t split, int frac_words);

struct PreconditionReport {
  bool pass = true;
  /// sigma_min of the i-block minors touching the top-right corner, i = 1..m.
  std::vector<FixedPoint> top_right;
  /// sigma_min of the i-block minors touching the bottom-left corner.
  std::vector<FixedPoint> bottom_left;
  FixedPoint worst;
};

/// Oracle check that every corner minor of H has sigma_min >= alpha.
PreconditionReport hankel_precondition_check(const BlockHankel& H, const FixedPoint& alpha);

/// Solver for a block Hankel matrix: builds the operator for T = H J and
/// undoes the column reversal on output.
class HankelSolver {
 public:
  HankelSolver(const BlockHankel& H, const HankelSolverOptions& options);

  DenseMatrix solve(const DenseMatrix& B) const;
  LinOp as_linop() const;
  const SolveOperator& toeplitz_inverse() const { return op_; }

 private:
  std::size_t s_ = 0;
  SolveOperator op_;
};

}  // namespace hpsolve
