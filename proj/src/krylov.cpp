#include "hpsolve/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hpsolve/errors.hpp"
#include "hpsolve/random.hpp"
#include "hpsolve/spectral.hpp"

namespace hpsolve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double truncation_bound(std::size_t n) { return std::max(2.0, static_cast<double>(n)); }

FixedPoint int_power(std::size_t base, unsigned exponent) {
  mpz_class v;
  mpz_ui_pow_ui(v.get_mpz_t(), base, exponent);
  return FixedPoint::from_mpz(v);
}

// Pi_A b through the eigendecomposition of A^T A, keeping eigenvalues above
// lambda_max / (4 kappa^2).
DenseMatrix projected_rhs(const SparseMatrix& A, const DenseMatrix& b, const FixedPoint& kappa) {
  const int W = 4;
  const DenseMatrix Ad = A.to_dense();
  const DenseMatrix G = mat_tmul_exact(Ad, Ad);
  const FixedPoint gmax = FixedPoint::from_int(1) + max_entry_magnitude(G);
  const EigenDecomposition e = eig_sym_oracle(G, FixedPoint::pow2(-W * kWordBits + 8) * gmax);
  const FixedPoint lmax = e.report.values.back();
  const FixedPoint keep = fp_div(lmax, FixedPoint::from_int(4) * kappa * kappa, 2 * W);
  const DenseMatrix Atb = sparse_tmatvec(A, b);
  const DenseMatrix Vt_Atb = mat_tmul(e.vectors, Atb, 2 * W);
  DenseMatrix coeff(Vt_Atb.rows(), Vt_Atb.cols(), 2 * W);
  for (std::size_t k = 0; k < coeff.rows(); ++k) {
    const FixedPoint& lam = e.report.values[k];
    if (lam <= keep) continue;
    for (std::size_t j = 0; j < coeff.cols(); ++j) coeff.set(k, j, fp_div(Vt_Atb.at(k, j), lam, 2 * W));
  }
  return sparse_matvec(A, mat_mul(e.vectors, coeff, 2 * W));
}

}  // namespace

SparseMatrix perturb_symmetric(const SparseMatrix& A_bar, double p, const FixedPoint& sigma, std::uint64_t seed) {
  if (A_bar.rows() != A_bar.cols() || !A_bar.is_symmetric()) {
    throw PreconditionError("perturb_symmetric: input is not symmetric");
  }
  if (p < 0.0 || p > 1.0) throw PreconditionError("perturb_symmetric: probability outside [0, 1]");
  const std::size_t n = A_bar.rows();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Triplet> noise;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      if (coin(rng) >= p) continue;
      const FixedPoint v = sigma * FixedPoint::from_double(truncated_gaussian(rng, truncation_bound(n)), 1);
      noise.push_back({i, j, v});
      if (i != j) noise.push_back({j, i, v});
    }
  }
  return A_bar + SparseMatrix(n, n, std::move(noise));
}

SparseMatrix sparse_gaussian(std::size_t n, std::size_t s, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double p = n == 0 ? 0.0 : static_cast<double>(h) / static_cast<double>(n);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (coin(rng) >= p) continue;
      t.push_back({i, j, FixedPoint::from_double(truncated_gaussian(rng, truncation_bound(n)), 1)});
    }
  }
  return SparseMatrix(n, s, std::move(t));
}

DenseMatrix KrylovSpace::K() const { return hstack(Blocks(powers.begin(), powers.begin() + static_cast<long>(m))); }

DenseMatrix KrylovSpace::AK() const { return hstack(Blocks(powers.begin() + 1, powers.begin() + static_cast<long>(m) + 1)); }

BlockHankel KrylovSpace::gram() const { return {s, m, hankel}; }

KrylovSpace build_krylov(const LinOp& A, const SparseMatrix& starter, std::size_t m, int frac_words) {
  if (A.rows != A.cols || A.cols != starter.rows()) throw DimensionError("build_krylov: dimension mismatch");
  if (m == 0) throw DimensionError("build_krylov: m must be positive");
  KrylovSpace ks;
  ks.n = A.rows;
  ks.s = starter.cols();
  ks.m = m;
  ks.frac_words = frac_words;
  ks.starter = starter;
  ks.powers.push_back(starter.to_dense());
  for (std::size_t i = 1; i <= m; ++i) ks.powers.push_back(A.apply(ks.powers.back()).rounded(frac_words));
  for (std::size_t i = 2; i <= 2 * m; ++i) {
    const std::size_t a = i / 2;
    const std::size_t b = i - a;
    if (a == b) {
      ks.hankel.push_back(gram(ks.powers[a], frac_words));
    } else {
      ks.hankel.push_back(symmetrized(mat_tmul(ks.powers[a], ks.powers[b], frac_words)).rounded(frac_words));
    }
  }
  return ks;
}

int WordLedger::max() const { return std::max({perturb, krylov, hankel_solve, pad, apply}); }

DenseMatrix PaddedSystem::solve_gram(const DenseMatrix& v, bool transpose) const {
  const std::size_t ms = W.rows();
  const int L = frac_words;
  const DenseMatrix u = v.block(0, 0, ms, v.cols());
  const DenseMatrix v2 = v.block(ms, 0, r, v.cols());
  const DenseMatrix t = v2 - mat_tmul(W, u, L);
  const DenseMatrix z = transpose ? mat_tmul(schur_inverse, t, L) : mat_mul(schur_inverse, t, L);
  const DenseMatrix zu = transpose ? hankel->as_linop().apply_transpose(u) : hankel->solve(u);
  const DenseMatrix x1 = zu.at_most(L) - mat_mul(W, z, L);
  return vstack({x1, z});
}

DenseMatrix PaddedSystem::solve(const DenseMatrix& x) const {
  const int L = frac_words;
  const DenseMatrix y = solve_gram(vstack({mat_tmul(AK, x, L), mat_tmul(AG, x, L)}));
  const std::size_t ms = K.cols();
  return (mat_mul(K, y.block(0, 0, ms, y.cols()), L) + mat_mul(G, y.block(ms, 0, r, y.cols()), L)).at_most(L);
}

DenseMatrix PaddedSystem::solve_transpose(const DenseMatrix& x) const {
  const int L = frac_words;
  const DenseMatrix y = solve_gram(vstack({mat_tmul(K, x, L), mat_tmul(G, x, L)}), true);
  const std::size_t ms = K.cols();
  return (mat_mul(AK, y.block(0, 0, ms, y.cols()), L) + mat_mul(AG, y.block(ms, 0, r, y.cols()), L)).at_most(L);
}

int PaddedSystem::stored_frac_words() const {
  int w = std::max({K.frac_words(), AK.frac_words(), G.frac_words(), AG.frac_words(), W.frac_words(),
                    schur_inverse.frac_words()});
  if (hankel) w = std::max(w, hankel->toeplitz_inverse().stored_frac_words());
  return w;
}

namespace {

PaddedSystem pad_with(const KrylovSpace& ks, const LinOp& A, std::shared_ptr<const HankelSolver> hankel,
                      std::uint64_t seed) {
  const std::size_t n = ks.n;
  const std::size_t ms = ks.m * ks.s;
  if (ms >= n) throw PreconditionError("pad_and_solve: no columns left to pad (m s >= n)");
  PaddedSystem ps;
  ps.r = n - ms;
  ps.frac_words = ks.frac_words;
  const int L = ks.frac_words;
  ps.K = ks.K();
  ps.AK = ks.AK();
  std::mt19937_64 rng(seed);
  const FixedPoint inv_n2 = fp_div(FixedPoint::from_int(1), int_power(n, 2), L + 1);
  ps.G = scale(gaussian_matrix(n, ps.r, rng, truncation_bound(n), 1), inv_n2).rounded(L);
  ps.AG = A.apply(ps.G).rounded(L);
  ps.hankel = std::move(hankel);
  const DenseMatrix C = mat_tmul(ps.AK, ps.AG, L);
  ps.W = ps.hankel->solve(C).rounded(L);
  const DenseMatrix S = symmetrized(gram(ps.AG, L) - mat_mul(C.transposed(), ps.W, L)).rounded(L);
  ps.schur_inverse = dense_inverse_oracle(S, FixedPoint::pow2(-static_cast<long>(L) * kWordBits)).rounded(L);
  return ps;
}

}  // namespace

PaddedSystem pad_and_solve(const KrylovSpace& ks, const LinOp& A, const HankelSolverOptions& hankel_options,
                           std::uint64_t seed) {
  HankelSolverOptions opt = hankel_options;
  if (opt.working_words == 0) opt.working_words = ks.frac_words;
  return pad_with(ks, A, std::make_shared<const HankelSolver>(ks.gram(), opt), seed);
}

KrylovParams krylov_params(std::size_t n, const BlockKrylovOptions& options) {
  if (options.m == 0) throw PreconditionError("block_krylov: m must be positive");
  KrylovParams p;
  p.n = n;
  p.m = options.m;
  const double log2_inv_alpha = std::max(1.0, -options.log2_alpha);
  const long s = options.s ? static_cast<long>(options.s)
                           : static_cast<long>(n / options.m) - static_cast<long>(options.pad_coeff * options.m);
  if (s < 1) throw PreconditionError("block_krylov: block size floor(n/m) - pad m is below 1");
  p.s = static_cast<std::size_t>(s);
  if (p.s * p.m >= n) throw PreconditionError("block_krylov: m s must leave at least one padding column");
  const double m3 = std::pow(static_cast<double>(options.m), 3.0);
  p.h = static_cast<std::size_t>(std::min(static_cast<double>(n), std::ceil(options.h_coeff * m3 * log2_inv_alpha)));
  p.L = options.frac_words > 0
            ? options.frac_words
            : static_cast<int>(std::ceil(options.c_L * static_cast<double>(options.m) * log2_inv_alpha / kWordBits));
  return p;
}

BlockKrylovSolver::BlockKrylovSolver(const LinOp& A, const BlockKrylovOptions& options) {
  if (A.rows != A.cols) throw DimensionError("block_krylov: operator is not square");
  params_ = krylov_params(A.rows, options);
  const SeedStreams streams(options.seed);

  auto t0 = Clock::now();
  const SparseMatrix starter = sparse_gaussian(params_.n, params_.s, params_.h, streams.derive("starter"));
  ks_ = build_krylov(A, starter, params_.m, params_.L);
  timings_.krylov = seconds_since(t0);
  for (const auto& P : ks_.powers) words_.krylov = std::max(words_.krylov, P.frac_words());
  for (const auto& H : ks_.hankel) words_.krylov = std::max(words_.krylov, H.frac_words());

  t0 = Clock::now();
  HankelSolverOptions hopt;
  // Precision is pinned to the Krylov budget; the compression tolerance
  // takes half of it.
  hopt.working_words = params_.L;
  hopt.epsilon = FixedPoint::pow2(-static_cast<long>(params_.L) * kWordBits / 2);
  hopt.log2_alpha = 0.0;
  hopt.seed = streams.derive("hankel");
  hopt.conv = options.conv;
  auto hankel = std::make_shared<const HankelSolver>(ks_.gram(), hopt);
  timings_.hankel_solve = seconds_since(t0);
  words_.hankel_solve = hankel->toeplitz_inverse().stored_frac_words();

  t0 = Clock::now();
  padded_ = pad_with(ks_, A, std::move(hankel), streams.derive("pad"));
  timings_.pad = seconds_since(t0);
  words_.pad = std::max({padded_.G.frac_words(), padded_.AG.frac_words(), padded_.W.frac_words(),
                         padded_.schur_inverse.frac_words()});
}

LinOp BlockKrylovSolver::as_linop() const {
  auto p = std::make_shared<PaddedSystem>(padded_);
  return {params_.n, params_.n, [p](const DenseMatrix& x) { return p->solve(x); },
          [p](const DenseMatrix& x) { return p->solve_transpose(x); }};
}

SolveReport lea(const SparseMatrix& A, const DenseMatrix& b, const FixedPoint& kappa, const FixedPoint& eps,
                std::uint64_t seed, const LeaOptions& options) {
  if (b.rows() != A.rows()) throw DimensionError("lea: right-hand side height does not match A");
  if (kappa < FixedPoint::from_int(1)) throw PreconditionError("lea: kappa must be at least 1");
  if (eps.sign() <= 0 || eps >= FixedPoint::from_int(1)) throw PreconditionError("lea: epsilon must lie in (0, 1)");
  const std::size_t n = A.cols();
  const std::size_t N = std::max(A.rows(), A.cols());
  if (n < 2) throw PreconditionError("lea: need at least two unknowns");

  SolveReport rep;
  rep.seed = seed;
  rep.epsilon = eps.to_double();
  rep.kappa = kappa.to_double();

  const double log2n = std::log2(static_cast<double>(N));
  const double log2kappa = kappa.log2_abs();
  const double log2eps = eps.log2_abs();
  rep.log2_alpha = -5.0 * log2n * (8.0 * log2n + 2.0 * log2kappa - log2eps);

  std::size_t m = options.m ? options.m : plan_m(static_cast<double>(N), static_cast<double>(std::max(A.nnz(), N)), options.omega).m;
  BlockKrylovOptions bk;
  bk.log2_alpha = rep.log2_alpha;
  bk.frac_words = options.frac_words;
  bk.conv = options.conv;
  for (;; --m) {
    bk.m = m;
    if (static_cast<long>(n / m) - static_cast<long>(bk.pad_coeff * m) >= 1 || m == 1) break;
  }
  if (static_cast<long>(n / m) - static_cast<long>(bk.pad_coeff * m) < 1) {
    // Too few unknowns for five padding columns per step: keep one.
    bk.s = n - 1;
  }
  const KrylovParams params = krylov_params(n, bk);
  rep.m = params.m;
  rep.s = params.s;
  rep.h = params.h;
  rep.L = params.L;
  rep.budget_words = static_cast<int>(std::ceil(bk.c_L * static_cast<double>(params.m) *
                                                std::max(1.0, -rep.log2_alpha) / kWordBits));
  const int L = params.L;

  const FixedPoint theta = max_entry_magnitude(A);
  if (theta.is_zero()) {
    rep.x = DenseMatrix(n, b.cols());
    rep.contract_met = true;
    rep.certified_by = "bound";
    rep.attempts = 0;
    return rep;
  }

  FixedPoint sigma = options.sigma_pert;
  if (sigma.is_zero()) {
    const FixedPoint denom = int_power(N, 10) * kappa * kappa;
    sigma = fp_div(eps, denom, std::max(1, words_for_log2(log2eps - 10 * log2n - 2 * log2kappa - 64)));
  }
  const double p = options.p_pert > 0.0 ? options.p_pert
                                        : std::min(1.0, log2n * std::max(1.0, log2kappa - log2eps) / static_cast<double>(N));
  const FixedPoint c = fp_div(FixedPoint::from_int(1), int_power(N, 4) * theta * theta, L);

  const FixedPoint bb = frobenius_norm_sq(b);
  for (int attempt = 0; attempt <= options.max_resamples; ++attempt) {
    const std::uint64_t attempt_seed =
        attempt == 0 ? seed : SeedStreams(seed).derive("resample:" + std::to_string(attempt));
    const SeedStreams streams(attempt_seed);
    rep.attempts = attempt + 1;

    auto t0 = Clock::now();
    const SparseMatrix R = perturb_symmetric(SparseMatrix(n, n, {}), p, sigma, streams.derive("perturb"));
    rep.timings.perturb = seconds_since(t0);
    rep.words.perturb = R.max_frac_words();

    auto Rp = std::make_shared<const SparseMatrix>(R);
    auto Ap = std::make_shared<const SparseMatrix>(A);
    auto tilde = [Ap, Rp, c, L](const DenseMatrix& B) {
      const DenseMatrix normal = scale(sparse_tmatvec(*Ap, sparse_matvec(*Ap, B)), c).rounded(L);
      return (normal + sparse_matvec(*Rp, B)).rounded(L);
    };
    const LinOp A_tilde{n, n, tilde, tilde};

    bk.seed = attempt_seed;
    try {
      const BlockKrylovSolver solver(A_tilde, bk);
      rep.timings.krylov = solver.timings().krylov;
      rep.timings.hankel_solve = solver.timings().hankel_solve;
      rep.timings.pad = solver.timings().pad;
      rep.words.krylov = solver.words().krylov;
      rep.words.hankel_solve = solver.words().hankel_solve;
      rep.words.pad = solver.words().pad;

      t0 = Clock::now();
      const DenseMatrix y = solver.solve(sparse_tmatvec(A, b));
      rep.x = scale(y, c).rounded(L);
      rep.timings.apply = seconds_since(t0);
      rep.words.apply = std::max(y.frac_words(), rep.x.frac_words());
    } catch (const SingularMatrixError& e) {
      rep.failure = e.what();
      continue;
    } catch (const CompressionError& e) {
      rep.failure = e.what();
      continue;
    }

    const DenseMatrix resid = sparse_matvec(A, rep.x) - b;
    const FixedPoint rr = frobenius_norm_sq(resid);
    const FixedPoint slack = bb - rr;
    if (slack.sign() > 0 && rr <= eps * slack) {
      rep.residual = std::sqrt(rr.to_double());
      rep.relative_residual = std::sqrt(rr.to_double() / slack.to_double());
      rep.contract_met = true;
      rep.certified_by = "bound";
      rep.failure.clear();
      return rep;
    }
    if (n <= oracle_cap() && A.rows() <= oracle_cap()) {
      const DenseMatrix pb = projected_rhs(A, b, kappa);
      const DenseMatrix diff = sparse_matvec(A, rep.x) - pb;
      const FixedPoint dd = frobenius_norm_sq(diff);
      const FixedPoint pp = frobenius_norm_sq(pb);
      rep.residual = std::sqrt(dd.to_double());
      rep.relative_residual = pp.is_zero() ? (dd.is_zero() ? 0.0 : INFINITY) : std::sqrt(dd.to_double() / pp.to_double());
      rep.certified_by = "oracle";
      if (dd <= eps * pp) {
        rep.contract_met = true;
        rep.failure.clear();
        return rep;
      }
    } else {
      rep.residual = std::sqrt(rr.to_double());
      rep.relative_residual = slack.sign() > 0 ? std::sqrt(rr.to_double() / slack.to_double()) : INFINITY;
      rep.certified_by = "bound";
    }
    rep.failure = "residual contract not met";
  }
  rep.contract_met = false;
  return rep;
}

MPlan plan_m(double n, double nnz, double omega) {
  if (!(omega > 2.0 && omega <= 3.0)) throw std::invalid_argument("plan_m: omega must lie in (2, 3]");
  if (!(n >= 1.0) || nnz < n) throw std::invalid_argument("plan_m: need n >= 1 and nnz >= n");
  MPlan plan;
  const double by_nnz = n * std::pow(nnz, -1.0 / (omega - 1.0));
  const double by_n = std::pow(n, (omega - 2.0) / (omega + 1.0));
  plan.m_real = std::min(by_nnz, by_n);
  plan.m = static_cast<std::size_t>(std::max(1.0, std::floor(plan.m_real + 0.5)));
  const double dense_term = (5.0 * omega - 4.0) / (omega + 1.0);
  const double log_n_nnz = n > 1.0 ? std::log(nnz) / std::log(n) : 1.0;
  const double sparse_term = 2.0 + (omega - 2.0) / (omega - 1.0) * log_n_nnz;
  plan.exponent = std::max(dense_term, sparse_term);
  return plan;
}

}  // namespace hpsolve
