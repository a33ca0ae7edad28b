#include "hpsolve/hankel_solver.hpp"

#include <algorithm>
#include <cmath>

#include "hpsolve/lowrank.hpp"
#include "hpsolve/random.hpp"
#include "hpsolve/spectral.hpp"

namespace hpsolve {

namespace {

using Node = SolveOperator::Node;

DenseMatrix rows_of(const DenseMatrix& B, std::size_t r0, std::size_t nr) { return B.block(r0, 0, nr, B.cols()); }

DenseMatrix shift_down(const DenseMatrix& B, std::size_t s) {
  DenseMatrix out(B.rows(), B.cols(), B.frac_words());
  if (s < B.rows()) out.set_block(s, 0, rows_of(B, 0, B.rows() - s));
  return out;
}

DenseMatrix shift_up(const DenseMatrix& B, std::size_t s) {
  DenseMatrix out(B.rows(), B.cols(), B.frac_words());
  if (s < B.rows()) out.set_block(0, 0, rows_of(B, s, B.rows() - s));
  return out;
}

DenseMatrix stack(const DenseMatrix& top, const DenseMatrix& bottom) { return vstack({top, bottom}); }

double log2_norm(const DenseMatrix& A) { return 0.5 * frobenius_norm_sq(A).log2_abs(); }

LinOp rounded_linop(const DisplacedOperator& op, int words, std::shared_ptr<const DisplacedOperator> keep) {
  const std::size_t n = op.n();
  return {n, n, [keep, words](const DenseMatrix& B) { return keep->apply(B).at_most(words); },
          [keep, words](const DenseMatrix& B) { return keep->apply_transpose(B).at_most(words); }};
}

// M - D M D^T (plus) or M - D^T M D (minus) for the operator M, D the
// down shift by s.
LinOp displacement_linop(const LinOp& M, std::size_t s, DisplacementSign sign, int words) {
  auto make = [s, sign, words](std::function<DenseMatrix(const DenseMatrix&)> f) {
    return [f, s, sign, words](const DenseMatrix& B) {
      if (sign == DisplacementSign::plus) return (f(B) - shift_down(f(shift_up(B, s)), s)).at_most(words);
      return (f(B) - shift_up(f(shift_down(B, s)), s)).at_most(words);
    };
  };
  return {M.rows, M.cols, make(M.apply), make(M.apply_transpose)};
}

// Block LDU inverse: [[I, -Z1 T12], [0, I]] diag(Z1, ZS) [[I, 0], [-T21 Z1, I]].
LinOp three_factor(const LinOp& Z1, const LinOp& ZS, const LinOp& T, std::size_t split, int words) {
  const std::size_t n = T.rows;
  auto make = [split, n, words](std::function<DenseMatrix(const DenseMatrix&)> z1,
                                std::function<DenseMatrix(const DenseMatrix&)> zs,
                                std::function<DenseMatrix(const DenseMatrix&)> t) {
    return [=](const DenseMatrix& B) {
      const std::size_t k = n - split;
      const std::size_t c = B.cols();
      const DenseMatrix y1 = z1(rows_of(B, 0, split)).at_most(words);
      const DenseMatrix t1 = t(stack(y1, DenseMatrix(k, c))).at_most(words);
      const DenseMatrix w2 = rows_of(B, split, k) - rows_of(t1, split, k);
      const DenseMatrix y2 = zs(w2).at_most(words);
      const DenseMatrix t2 = t(stack(DenseMatrix(split, c), y2)).at_most(words);
      const DenseMatrix x1 = y1 - z1(rows_of(t2, 0, split)).at_most(words);
      return stack(x1, y2).at_most(words);
    };
  };
  return {n, n, make(Z1.apply, ZS.apply, T.apply),
          make(Z1.apply_transpose, ZS.apply_transpose, T.apply_transpose)};
}

DenseMatrix node_apply(const Node& node, const DenseMatrix& B, int words, bool transpose) {
  if (node.is_base()) return mat_mul(transpose ? node.inverse_t : node.inverse, B, words);
  return (transpose ? node.inverse_op->apply_transpose(B) : node.inverse_op->apply(B)).at_most(words);
}

LinOp node_linop(std::shared_ptr<const Node> node, int words) {
  const std::size_t n = node->s * node->m;
  return {n, n, [node, words](const DenseMatrix& B) { return node_apply(*node, B, words, false); },
          [node, words](const DenseMatrix& B) { return node_apply(*node, B, words, true); }};
}

class Builder {
 public:
  Builder(const HankelSolverOptions& options, int words, std::size_t s, std::size_t m)
      : options_(options), words_(words), streams_(options.seed) {
    const double log2_inv_alpha = std::max(0.0, -options.log2_alpha);
    const double levels = std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(m, 2))));
    eff_bits_ = static_cast<long>(std::ceil(-options.epsilon.log2_abs() + 2.0 * log2_inv_alpha * levels + 64.0));
    (void)s;
    delta_op_ = FixedPoint::pow2(-(static_cast<long>(words) * kWordBits - 16));
  }

  std::shared_ptr<const Node> build(const DisplacedRep& R, std::size_t depth, const std::string& path) {
    auto node = std::make_shared<Node>();
    node->s = R.s;
    node->m = R.m;
    node->depth = depth;
    node->rep = R;
    if (R.m == 1) {
      const DenseMatrix M = rep_to_dense(R);
      node->inverse = dense_inverse_oracle(M, FixedPoint::pow2(-static_cast<long>(words_) * kWordBits)).rounded(words_);
      node->inverse_t = node->inverse.transposed();
      return node;
    }
    const std::size_t s = R.s;
    const std::size_t k1 = (R.m + 1) / 2;
    const std::size_t k2 = R.m - k1;
    const std::size_t split = k1 * s;
    const std::size_t n = R.m * s;
    const std::size_t r = R.rank();

    const DisplacedRep prefix_rep{s, k1, DisplacementSign::plus, R.X.block(0, 0, split, r), R.Y.block(0, 0, split, r)};
    node->prefix = build(prefix_rep, depth + 1, path + "p");

    auto T_op = std::make_shared<const DisplacedOperator>(R, delta_op_, options_.conv);
    const LinOp T = rounded_linop(*T_op, words_, T_op);
    const LinOp Z1 = node_linop(node->prefix, words_);
    const LinOp SC = implicit_schur(Z1, T, split, words_);

    NodeTrace tr;
    tr.depth = depth;
    tr.m = R.m;

    const LinOp Dplus = displacement_linop(SC, s, DisplacementSign::plus, words_);
    const RankFactorization fs = compress(Dplus, 2 * s, depth, path + "/schur", tr.schur_compression_log2);
    node->schur_rep = {s, k2, DisplacementSign::plus, fs.X, fs.Y};
    node->schur = build(node->schur_rep, depth + 1, path + "s");

    const LinOp ZS = node_linop(node->schur, words_);
    const LinOp Z3 = three_factor(Z1, ZS, T, split, words_);
    const LinOp Dminus = displacement_linop(Z3, s, DisplacementSign::minus, words_);
    const RankFactorization fi = compress(Dminus, 2 * s, depth, path + "/inverse", tr.inverse_compression_log2);
    node->inverse_rep = {s, R.m, DisplacementSign::minus, fi.X, fi.Y};
    node->inverse_op = std::make_shared<const DisplacedOperator>(node->inverse_rep, delta_op_, options_.conv);

    if (options_.instrument && n <= 64) record(*node, split, tr);
    return node;
  }

  std::vector<NodeTrace> trace;

 private:
  RankFactorization compress(const LinOp& D, std::size_t rank, std::size_t depth, const std::string& tag,
                             double& residual_log2) {
    const std::string stream = "sketch:" + std::to_string(depth);
    std::mt19937_64 probe_rng(splitmix64(streams_.derive(stream) ^ streams_.derive("probe" + tag)));
    const DenseMatrix g = gaussian_matrix(D.cols, 2, probe_rng, std::max(2.0, double(D.cols)), 1);
    const DenseMatrix Dg = D.apply(g);
    const double norm_log2 = std::max(0.0, std::ceil(log2_norm(Dg)));
    const FixedPoint eps = FixedPoint::pow2(-eff_bits_ + static_cast<long>(norm_log2));
    LowRankOptions lr;
    lr.frac_words = words_;
    const RankFactorization f =
        low_rank_approx(D, rank, eps, splitmix64(streams_.derive(stream) ^ streams_.derive(tag)), lr);

    const DenseMatrix approx = mat_mul_exact(f.X, mat_tmul_exact(f.Y, g));
    const FixedPoint resid = frobenius_norm_sq(Dg - approx);
    const FixedPoint base = frobenius_norm_sq(Dg);
    residual_log2 = 0.5 * (resid.log2_abs() - base.log2_abs());
    // Threshold 2^{-wL/4} relative to the probe image, with an absolute floor
    // at the working precision for operators that vanish.
    const FixedPoint thr = FixedPoint::pow2(-static_cast<long>(words_) * kWordBits / 2) * base +
                           FixedPoint::pow2(-static_cast<long>(words_) * kWordBits);
    if (resid > thr) {
      throw CompressionError("recursive_sc: rank-" + std::to_string(rank) + " compression residual 2^" +
                             std::to_string(residual_log2) + " exceeds threshold at " + tag);
    }
    return f;
  }

  void record(const Node& node, std::size_t split, NodeTrace tr) {
    const int hi = 2 * words_ + 2;
    const FixedPoint tight = FixedPoint::pow2(-static_cast<long>(hi) * kWordBits);
    const DenseMatrix Tn = rep_to_dense(node.rep);
    const std::size_t n = Tn.rows();
    const std::size_t k = n - split;
    const DenseMatrix A = Tn.block(0, 0, split, split);
    const DenseMatrix Ainv = dense_inverse_oracle(A, tight);
    const DenseMatrix SCx = Tn.block(split, split, k, k) -
                            mat_mul(mat_mul(Tn.block(split, 0, k, split), Ainv, hi), Tn.block(0, split, split, k), hi);
    tr.schur_error_log2 = log2_norm(rep_to_dense(node.schur_rep) - SCx);
    const FixedPoint svd_tol = FixedPoint::pow2(-static_cast<long>(words_) * kWordBits);
    const SpectralReport ss = svd_oracle(SCx, svd_tol);
    tr.schur_sigma_min_log2 = ss.log2_min_abs();
    tr.schur_sigma_max_log2 = ss.log2_max_abs();
    const SpectralReport ts = svd_oracle(Tn, svd_tol);
    tr.node_sigma_min_log2 = ts.log2_min_abs();
    tr.node_sigma_max_log2 = ts.log2_max_abs();
    const DenseMatrix Zd = node_apply(node, DenseMatrix::identity(n), words_, false);
    tr.inverse_error_log2 = log2_norm(Zd - dense_inverse_oracle(Tn, tight));
    trace.push_back(tr);
  }

  const HankelSolverOptions& options_;
  int words_;
  SeedStreams streams_;
  long eff_bits_ = 0;
  FixedPoint delta_op_;
};

int max_words(const DisplacedRep& R) { return R.X.empty() ? 0 : R.frac_words(); }

int stored_words(const Node& node) {
  if (node.is_base()) return node.inverse.frac_words();
  int w = std::max({max_words(node.rep), max_words(node.schur_rep), max_words(node.inverse_rep)});
  w = std::max(w, stored_words(*node.prefix));
  return std::max(w, stored_words(*node.schur));
}

}  // namespace

int derive_working_words(const FixedPoint& epsilon, double log2_alpha, std::size_t s, std::size_t m) {
  const double log2_inv_alpha = std::max(0.0, -log2_alpha);
  const double levels = std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(m, 2))));
  const double eff_bits = -epsilon.log2_abs() + 2.0 * log2_inv_alpha * levels + 64.0;
  const double n_bits = 2.0 * std::log2(static_cast<double>(std::max<std::size_t>(s * m, 2)));
  return static_cast<int>(std::ceil((eff_bits + 2.0 * log2_inv_alpha + n_bits + 64.0) / kWordBits));
}

SolveOperator::SolveOperator(std::shared_ptr<const Node> root, int working_words, std::vector<NodeTrace> trace)
    : root_(std::move(root)), working_words_(working_words), trace_(std::move(trace)) {}

std::size_t SolveOperator::s() const { return root_ ? root_->s : 0; }
std::size_t SolveOperator::m() const { return root_ ? root_->m : 0; }

DenseMatrix SolveOperator::apply(const DenseMatrix& B) const {
  if (B.rows() != n()) throw DimensionError("SolveOperator::apply: row count mismatch");
  return node_apply(*root_, B, working_words_, false);
}

DenseMatrix SolveOperator::apply_transpose(const DenseMatrix& B) const {
  if (B.rows() != n()) throw DimensionError("SolveOperator::apply_transpose: row count mismatch");
  return node_apply(*root_, B, working_words_, true);
}

LinOp SolveOperator::as_linop() const {
  auto self = std::make_shared<SolveOperator>(*this);
  return {n(), n(), [self](const DenseMatrix& B) { return self->apply(B); },
          [self](const DenseMatrix& B) { return self->apply_transpose(B); }};
}

DisplacedRep SolveOperator::inverse_rep() const {
  if (root_->is_base()) {
    return {root_->s, 1, DisplacementSign::minus, root_->inverse, DenseMatrix::identity(root_->s)};
  }
  return root_->inverse_rep;
}

int SolveOperator::stored_frac_words() const { return root_ ? stored_words(*root_) : 0; }

SolveOperator recursive_sc(std::size_t s, std::size_t m, const DenseMatrix& X, const DenseMatrix& Y,
                           const HankelSolverOptions& options) {
  if (s == 0 || m == 0) throw DimensionError("recursive_sc: empty geometry");
  if (X.rows() != s * m || Y.rows() != s * m || X.cols() != Y.cols()) {
    throw DimensionError("recursive_sc: generator shapes do not match s * m");
  }
  if (options.epsilon.sign() <= 0) throw std::invalid_argument("recursive_sc: epsilon must be positive");
  const int words = options.working_words > 0 ? options.working_words
                                              : derive_working_words(options.epsilon, options.log2_alpha, s, m);
  Builder builder(options, words, s, m);
  const DisplacedRep R{s, m, DisplacementSign::plus, X.at_most(words), Y.at_most(words)};
  auto root = builder.build(R, 0, "");
  return SolveOperator(std::move(root), words, std::move(builder.trace));
}

DenseMatrix solve_apply(const SolveOperator& Z, const DenseMatrix& B) { return Z.apply(B); }

LinOp implicit_schur(const LinOp& prefix_solve, const LinOp& T, std::size_t split, int frac_words) {
  if (T.rows != T.cols || split > T.rows || prefix_solve.rows != split) {
    throw DimensionError("implicit_schur: inconsistent split");
  }
  const std::size_t n = T.rows;
  const std::size_t k = n - split;
  auto make = [split, k, frac_words](std::function<DenseMatrix(const DenseMatrix&)> z,
                                     std::function<DenseMatrix(const DenseMatrix&)> t) {
    return [=](const DenseMatrix& B) {
      const std::size_t c = B.cols();
      const DenseMatrix y = t(stack(DenseMatrix(split, c), B)).at_most(frac_words);
      const DenseMatrix w = z(rows_of(y, 0, split)).at_most(frac_words);
      const DenseMatrix v = t(stack(w, DenseMatrix(k, c))).at_most(frac_words);
      return (rows_of(y, split, k) - rows_of(v, split, k)).at_most(frac_words);
    };
  };
  return {k, k, make(prefix_solve.apply, T.apply), make(prefix_solve.apply_transpose, T.apply_transpose)};
}

PreconditionReport hankel_precondition_check(const BlockHankel& H, const FixedPoint& alpha) {
  const DenseMatrix D = H.densify();
  const std::size_t s = H.s;
  const std::size_t m = H.m;
  const FixedPoint tol = alpha.scaled_pow2(-20).rounded(std::max(1, words_for_log2(alpha.log2_abs() - 20)));
  PreconditionReport rep;
  bool first = true;
  auto note = [&](const FixedPoint& v) {
    if (first || v < rep.worst) rep.worst = v;
    first = false;
    if (v < alpha) rep.pass = false;
  };
  for (std::size_t i = 1; i <= m; ++i) {
    const std::size_t w = i * s;
    const SpectralReport tr = svd_oracle(D.block(0, (m - i) * s, w, w), tol);
    const SpectralReport bl = svd_oracle(D.block((m - i) * s, 0, w, w), tol);
    rep.top_right.push_back(tr.values.front());
    rep.bottom_left.push_back(bl.values.front());
    note(tr.values.front());
    note(bl.values.front());
  }
  return rep;
}

HankelSolver::HankelSolver(const BlockHankel& H, const HankelSolverOptions& options) : s_(H.s) {
  const DisplacedRep R = toeplitz_generators(toeplitz_from_hankel(H));
  op_ = recursive_sc(H.s, H.m, R.X, R.Y, options);
}

// H = T J, so H^{-1} = J T^{-1}: reverse the row blocks of the output.
DenseMatrix HankelSolver::solve(const DenseMatrix& B) const { return reverse_row_blocks(op_.apply(B), s_); }

LinOp HankelSolver::as_linop() const {
  const SolveOperator op = op_;
  const std::size_t s = s_;
  return {op.n(), op.n(), [op, s](const DenseMatrix& B) { return reverse_row_blocks(op.apply(B), s); },
          [op, s](const DenseMatrix& B) { return op.apply_transpose(reverse_row_blocks(B, s)); }};
}

}  // namespace hpsolve
