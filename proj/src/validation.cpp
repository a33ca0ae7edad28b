#include "hpsolve/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "hpsolve/errors.hpp"
#include "hpsolve/krylov.hpp"
#include "hpsolve/linop.hpp"
#include "hpsolve/random.hpp"
#include "hpsolve/spectral.hpp"

namespace hpsolve {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double bound_for(std::size_t n) { return std::max(2.0, static_cast<double>(n)); }

FixedPoint power(const FixedPoint& x, std::size_t k) {
  FixedPoint r = FixedPoint::from_int(1);
  for (std::size_t i = 0; i < k; ++i) r = r * x;
  return r;
}

// log2 of a certified lower bound on sigma_min(M): sigma_min of the oracle
// minus its tolerance. The tolerance is tightened until the bound is
// positive or drops below 2^floor_log2.
double certified_sigma_min_log2(const DenseMatrix& M, double floor_log2) {
  for (long t = -128;; t *= 2) {
    const SpectralReport r = svd_oracle(M, FixedPoint::pow2(t));
    const FixedPoint lo = r.values.front().abs() - FixedPoint::pow2(t);
    if (lo.sign() > 0 && lo.log2_abs() > static_cast<double>(t) + 1.0) return lo.log2_abs();
    if (static_cast<double>(t) < floor_log2 - 16.0) return lo.sign() > 0 ? lo.log2_abs() : kNegInf;
  }
}

double sigma_max_log2(const DenseMatrix& M) {
  const SpectralReport r = svd_oracle(M, FixedPoint::pow2(-64));
  return r.values.back().log2_abs();
}

LinOp sparse_op(const SparseMatrix& A) {
  auto p = std::make_shared<const SparseMatrix>(A);
  return {A.rows(), A.cols(), [p](const DenseMatrix& B) { return sparse_matvec(*p, B); },
          [p](const DenseMatrix& B) { return sparse_tmatvec(*p, B); }};
}

double threshold(double exponent_log2, bool inject) { return inject ? exponent_log2 / 10.0 : exponent_log2; }

void finish(ClaimResult& c) {
  c.passed = 0;
  c.worst_margin_log2 = std::numeric_limits<double>::infinity();
  for (const auto& t : c.trials) {
    c.passed += t.pass;
    c.worst_margin_log2 = std::min(c.worst_margin_log2, t.value_log2 - t.threshold_log2);
  }
  c.pass = c.passed >= c.quota;
}

}  // namespace

TestSystem random_spd_system(std::size_t n, std::size_t nnz_per_row, double target_kappa, std::uint64_t seed) {
  if (n < 2) throw PreconditionError("random_spd_system: n must be at least 2");
  if (!(target_kappa > 1.0)) throw PreconditionError("random_spd_system: target kappa must exceed 1");
  std::mt19937_64 rng = SeedStreams(seed).stream("system");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t max_pairs = n * (n - 1) / 2;
  const std::size_t pairs = std::min(max_pairs, n * (nnz_per_row > 0 ? nnz_per_row - 1 : 0) / 2);
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  while (chosen.size() < pairs) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    chosen.insert(std::minmax(i, j));
  }
  std::vector<Triplet> t;
  for (const auto& [i, j] : chosen) {
    const FixedPoint v = FixedPoint::from_double(truncated_gaussian(rng, bound_for(n)), 1);
    t.push_back({i, j, v});
    t.push_back({j, i, v});
  }
  const SparseMatrix B(n, n, t);
  const EigenDecomposition e = eig_sym_oracle(B.to_dense(), FixedPoint::pow2(-100));
  const double lmin = e.report.values.front().to_double();
  const double lmax = e.report.values.back().to_double();
  // (lmax + c) / (lmin + c) = target_kappa, with c rounded up to 2^-20.
  double c = (lmax - target_kappa * lmin) / (target_kappa - 1.0);
  c = std::ceil(std::ldexp(std::max(c, 0.0), 20) + 1.0);
  const FixedPoint shift = FixedPoint::from_double(std::ldexp(c, -20), 1);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, shift});

  TestSystem sys;
  sys.A = SparseMatrix(n, n, std::move(t));
  const SpectralReport s = svd_oracle(sys.A.to_dense(), FixedPoint::pow2(-100));
  const double kappa = s.values.back().to_double() / s.values.front().to_double();
  sys.kappa = FixedPoint::from_int(static_cast<long>(std::ceil(kappa * (1.0 + 1e-9))));
  sys.b = gaussian_matrix(n, 1, rng, bound_for(n), 1);
  return sys;
}

VandermondeReport vandermonde_check(const std::vector<FixedPoint>& sigma, std::size_t m, const FixedPoint& alpha,
                                    std::uint64_t seed, std::size_t samples) {
  const std::size_t n = sigma.size();
  if (m == 0 || n < m) throw PreconditionError("vandermonde_check: need 1 <= m <= number of points");
  if (alpha.sign() <= 0 || alpha > FixedPoint::from_int(1)) throw PreconditionError("vandermonde_check: alpha must lie in (0, 1]");
  const int aw = std::max(1, alpha.frac_words());
  const FixedPoint inv_alpha = fp_div(FixedPoint::from_int(1), alpha, aw + 1);
  std::vector<FixedPoint> sorted = sigma;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (sorted[i] < alpha || sorted[i] > inv_alpha) throw PreconditionError("vandermonde_check: point outside [alpha, 1/alpha]");
    if (i > 0 && sorted[i] - sorted[i - 1] < alpha) throw PreconditionError("vandermonde_check: points closer than alpha");
  }

  VandermondeReport rep;
  rep.n = n;
  rep.m = m;
  const double la = alpha.log2_abs();
  const double md = static_cast<double>(m);
  rep.bound_log2 = -std::log2(md) - md + 2.0 * md * la;
  rep.stated_bound_log2 = -std::log2(md) - md + md * la;

  int sw = 0;
  for (const auto& x : sigma) sw = std::max(sw, x.frac_words());
  DenseMatrix V(n, m, sw * static_cast<int>(m - 1));
  for (std::size_t i = 0; i < n; ++i) {
    FixedPoint p = FixedPoint::from_int(1);
    for (std::size_t j = 0; j < m; ++j) {
      V.set(i, j, p);
      p = p * sigma[i];
    }
  }
  rep.sigma_min_log2 = certified_sigma_min_log2(V, rep.bound_log2);
  rep.pass = rep.sigma_min_log2 >= rep.bound_log2;

  const FixedPoint large = power(alpha, 3 * m);
  const int W = words_for_log2(3.0 * md * la - 64.0) + 1;
  std::mt19937_64 rng(seed);
  rep.required_large_entries = n - m + 1;
  rep.fewest_large_entries = n;
  for (std::size_t k = 0; k < samples; ++k) {
    DenseMatrix g = gaussian_matrix(m, 1, rng, 8.0, 1);
    const FixedPoint norm = fp_sqrt(frobenius_norm_sq(g), W);
    DenseMatrix x(m, 1, W);
    for (std::size_t j = 0; j < m; ++j) x.set(j, 0, fp_div(g.at(j, 0), norm, W));
    const DenseMatrix y = mat_mul_exact(V, x);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += y.at(i, 0).abs() >= large;
    rep.fewest_large_entries = std::min(rep.fewest_large_entries, count);
  }
  rep.rectangular_pass = rep.fewest_large_entries >= rep.required_large_entries;
  return rep;
}

DenseMatrix bad_matrix(std::size_t n, const FixedPoint& alpha) {
  DenseMatrix M(2 * n, 2 * n, alpha.frac_words());
  const FixedPoint one = FixedPoint::from_int(1);
  const FixedPoint two = FixedPoint::from_int(2);
  for (std::size_t i = 0; i < n; ++i) {
    M.set(i, i, one);
    M.set(n + i, n + i, alpha);
    if (i + 1 < n) {
      M.set(i + 1, i, alpha);
      M.set(n + i + 1, n + i, two);
    }
  }
  return M;
}

BadMatrixReport bad_matrix_example(std::size_t n, double alpha) {
  if (n < 1) throw PreconditionError("bad_matrix_example: n must be positive");
  BadMatrixReport rep;
  rep.n = n;
  rep.alpha = alpha;
  const FixedPoint a = FixedPoint::from_double(alpha, 1);
  const DenseMatrix M = bad_matrix(n, a);
  const FixedPoint tol = FixedPoint::pow2(-200);
  rep.sigma_min = svd_oracle(M, tol).values.front().to_double();
  rep.top_sigma_min = svd_oracle(M.block(0, 0, n, n), tol).values.front().to_double();
  rep.bottom_sigma_min = svd_oracle(M.block(n, n, n, n), tol).values.front().to_double();

  // L v = e_1 for v = [1; -beta; beta^2; ...] when L has ones on the
  // diagonal and beta below it, so ||L v|| / ||v|| = 1 / ||v||.
  auto inverse_norm = [n](double beta) {
    double s = 0.0, p = 1.0;
    for (std::size_t i = 0; i < n; ++i, p *= beta) s += p * p;
    return 1.0 / std::sqrt(s);
  };
  const double top = inverse_norm(std::abs(alpha));
  const double bottom = alpha == 0.0 ? 0.0 : std::abs(alpha) * inverse_norm(2.0 / std::abs(alpha));
  rep.test_vector_bound = std::min(top, bottom);

  const double e = static_cast<double>(n - 1);
  if (std::abs(alpha) >= 1.5) {
    rep.regime = "top";
    rep.regime_bound = std::pow(2.0 / 3.0, e);
    rep.pass = rep.top_sigma_min <= rep.regime_bound;
  } else {
    rep.regime = "bottom";
    rep.regime_bound = std::pow(3.0 / 4.0, e);
    rep.pass = rep.bottom_sigma_min <= rep.regime_bound;
  }
  rep.pass = rep.pass && rep.sigma_min <= rep.regime_bound && rep.sigma_min <= rep.test_vector_bound * (1.0 + 1e-9);
  return rep;
}

ValidationReport run_validation_suite(const ValidationConfig& cfg) {
  if (cfg.n < 8) throw PreconditionError("validation: n must be at least 8");
  if (cfg.trials == 0) throw PreconditionError("validation: need at least one trial");
  const std::size_t n = cfg.n;
  const double log2n = std::log2(static_cast<double>(n));
  const double log2kappa = std::log2(cfg.kappa);
  const bool inj = cfg.inject_failure;
  const SeedStreams master(cfg.seed);
  // The quota scales the 18-of-20 rule to the trial count.
  const std::size_t quota = (cfg.trials * 18 + 19) / 20;
  const std::size_t quota_strict = (cfg.trials * 19 + 19) / 20;

  ClaimResult gap{"perturbation_eigengap",
                  "eigenvalues of a randomly perturbed symmetric matrix with repeated eigenvalues are separated by at "
                  "least kappa^(-5 log2 n)",
                  quota};
  ClaimResult krylov{"krylov_singular_values",
                     "block Krylov matrix [G, AG, ...] has sigma_max <= n^2 and sigma_min >= alpha_A^(5m)", quota};
  ClaimResult padding{"padded_sigma_min",
                      "appending r Gaussian columns scaled by 1/n^2 keeps sigma_min >= n^(-10 r) sigma_min(K)", quota};
  ClaimResult lift{"perturbation_lifts_sigma_min",
                   "entrywise eps N(0,1) perturbation of a rank-deficient 16x8 matrix has sigma_min >= eps 10^-6",
                   quota_strict};

  const std::size_t half = n / 2;
  const std::size_t m = cfg.m;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t tseed = master.derive("trial:" + std::to_string(trial));
    const SeedStreams streams(tseed);

    // Two identical diagonal blocks give every eigenvalue multiplicity two.
    const TestSystem base = random_spd_system(half, 5, cfg.kappa, streams.derive("base"));
    FixedPoint rowmax;
    {
      std::vector<FixedPoint> rows(half);
      for (const auto& e : base.A.triplets()) rows[e.row] += e.value.abs();
      for (const auto& r : rows) rowmax = std::max(rowmax, r);
    }
    const long k = static_cast<long>(std::ceil(rowmax.log2_abs()));
    std::vector<Triplet> twice;
    for (const auto& e : base.A.triplets()) {
      const FixedPoint v = e.value.scaled_pow2(-k);
      twice.push_back({e.row, e.col, v});
      twice.push_back({e.row + half, e.col + half, v});
    }
    const SparseMatrix A_bar(2 * half, 2 * half, twice);
    const std::size_t nn = A_bar.rows();
    const FixedPoint sigma = fp_div(FixedPoint::from_int(1), FixedPoint::from_int(static_cast<long>(nn * nn)) * base.kappa, 2);
    const double p = std::min(1.0, 300.0 * log2kappa * log2n / static_cast<double>(nn));
    const SparseMatrix A = perturb_symmetric(A_bar, p, sigma, streams.derive("perturb"));

    // (a) eigenvalue gaps.
    const FixedPoint tau = FixedPoint::pow2(-160);
    const EigenDecomposition e = eig_sym_oracle(A.to_dense(), tau);
    FixedPoint min_gap = e.report.values.back() - e.report.values.front();
    for (std::size_t i = 1; i < e.report.values.size(); ++i)
      min_gap = std::min(min_gap, e.report.values[i] - e.report.values[i - 1]);
    const FixedPoint gap_lo = min_gap - tau - tau;
    TrialOutcome ta{tseed, gap_lo.sign() > 0 ? gap_lo.log2_abs() : kNegInf,
                    threshold(-5.0 * log2n * log2kappa, inj), false, ""};
    ta.pass = ta.value_log2 >= ta.threshold_log2;
    gap.trials.push_back(ta);

    // (b) Krylov singular values, alpha_A from the spectrum of A.
    const double lmin = e.report.values.front().log2_abs();
    const double lmax = e.report.values.back().log2_abs();
    const double log2_alpha = std::min({lmin, -lmax, ta.value_log2, -1.0});
    BlockKrylovOptions bk;
    bk.m = m;
    bk.log2_alpha = log2_alpha;
    const KrylovParams kp = krylov_params(nn, bk);
    const SparseMatrix G = sparse_gaussian(nn, kp.s, kp.h, streams.derive("starter"));
    const KrylovSpace ks = build_krylov(sparse_op(A), G, m, kp.L);
    const DenseMatrix K = ks.K();
    const double kmin_threshold = threshold(5.0 * static_cast<double>(m) * log2_alpha, inj);
    const double kmax_threshold = (inj ? 0.2 : 2.0) * log2n;
    const double kmin = certified_sigma_min_log2(K, kmin_threshold);
    const double kmax = sigma_max_log2(K);
    TrialOutcome tb{tseed, kmin, kmin_threshold, false, ""};
    if (kmax_threshold - kmax < kmin - kmin_threshold) {
      // Report the binding side as value - threshold with the same margin.
      tb.value_log2 = -kmax;
      tb.threshold_log2 = -kmax_threshold;
      tb.note = "sigma_max bound binds";
    }
    tb.pass = kmin >= kmin_threshold && kmax <= kmax_threshold;
    krylov.trials.push_back(tb);

    // (c) padding with r scaled Gaussian columns.
    const std::size_t r = nn - m * kp.s;
    std::mt19937_64 prng = streams.stream("pad");
    const FixedPoint inv_n2 = fp_div(FixedPoint::from_int(1), FixedPoint::from_int(static_cast<long>(nn * nn)), 2);
    const DenseMatrix Gpad = scale(gaussian_matrix(nn, r, prng, bound_for(nn), 1), inv_n2).rounded(2);
    const double qthreshold = threshold(-10.0 * static_cast<double>(r) * log2n, inj) + kmin;
    const double qmin = certified_sigma_min_log2(hstack({K, Gpad}), qthreshold);
    TrialOutcome tc{tseed, qmin, qthreshold, qmin >= qthreshold, ""};
    padding.trials.push_back(tc);

    // (d) perturbation lifts sigma_min of a rank-4 16 x 8 matrix.
    std::mt19937_64 drng = streams.stream("lift");
    const DenseMatrix low = mat_mul_exact(gaussian_matrix(16, 4, drng, 16, 1), gaussian_matrix(4, 8, drng, 16, 1));
    const long eps_log2 = -40;
    const DenseMatrix noisy = low + gaussian_matrix(16, 8, drng, 16, 1).scaled_pow2(eps_log2);
    const double dthreshold = threshold(static_cast<double>(eps_log2) - 6.0 * std::log2(10.0), inj);
    const double dmin = certified_sigma_min_log2(noisy, dthreshold);
    lift.trials.push_back({tseed, dmin, dthreshold, dmin >= dthreshold, ""});
  }

  ValidationReport rep;
  rep.config = cfg;
  for (ClaimResult* c : {&gap, &krylov, &padding, &lift}) {
    finish(*c);
    rep.claims.push_back(std::move(*c));
  }

  const FixedPoint a02 = FixedPoint::parse("0.2", 1);
  rep.vandermonde.push_back(vandermonde_check(
      {FixedPoint::parse("0.2", 1), FixedPoint::parse("0.5", 1), FixedPoint::parse("0.8", 1)}, 3, a02,
      master.derive("vandermonde:0")));
  {
    std::vector<FixedPoint> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(FixedPoint::from_double(0.25 + 0.5 * i, 1));
    rep.vandermonde.push_back(vandermonde_check(pts, 4, FixedPoint::pow2(-2), master.derive("vandermonde:1")));
  }
  for (double a : {1.0, 2.0, 3.0}) rep.bad_matrix.push_back(bad_matrix_example(10, a));

  rep.pass = true;
  for (const auto& c : rep.claims) rep.pass = rep.pass && c.pass;
  for (const auto& v : rep.vandermonde) rep.pass = rep.pass && v.pass && v.rectangular_pass;
  for (const auto& b : rep.bad_matrix) rep.pass = rep.pass && b.pass;
  return rep;
}

nlohmann::json to_json(const ValidationReport& report) {
  using nlohmann::json;
  json claims = json::array();
  for (const auto& c : report.claims) {
    json trials = json::array();
    for (const auto& t : c.trials) {
      json jt = {{"seed", t.seed}, {"value_log2", t.value_log2}, {"threshold_log2", t.threshold_log2}, {"pass", t.pass}};
      if (!t.note.empty()) jt["note"] = t.note;
      trials.push_back(jt);
    }
    claims.push_back({{"id", c.id},
                      {"description", c.description},
                      {"quota", c.quota},
                      {"trials", c.trials.size()},
                      {"passed", c.passed},
                      {"pass", c.pass},
                      {"worst_margin_log2", c.worst_margin_log2},
                      {"outcomes", trials}});
  }
  json vander = json::array();
  for (const auto& v : report.vandermonde) {
    vander.push_back({{"n", v.n},
                      {"m", v.m},
                      {"sigma_min_log2", v.sigma_min_log2},
                      {"bound_log2", v.bound_log2},
                      {"stated_bound_log2", v.stated_bound_log2},
                      {"pass", v.pass},
                      {"fewest_large_entries", v.fewest_large_entries},
                      {"required_large_entries", v.required_large_entries},
                      {"rectangular_pass", v.rectangular_pass}});
  }
  json bad = json::array();
  for (const auto& b : report.bad_matrix) {
    bad.push_back({{"n", b.n},
                   {"alpha", b.alpha},
                   {"sigma_min", b.sigma_min},
                   {"top_sigma_min", b.top_sigma_min},
                   {"bottom_sigma_min", b.bottom_sigma_min},
                   {"test_vector_bound", b.test_vector_bound},
                   {"regime", b.regime},
                   {"regime_bound", b.regime_bound},
                   {"pass", b.pass}});
  }
  const auto& cfg = report.config;
  return {{"config",
           {{"n", cfg.n},
            {"trials", cfg.trials},
            {"seed", cfg.seed},
            {"kappa", cfg.kappa},
            {"m", cfg.m},
            {"inject_failure", cfg.inject_failure}}},
          {"environment",
           {{"compiler", __VERSION__}, {"word_bits", kWordBits}, {"oracle_cap", oracle_cap()}, {"threads", 1}}},
          {"claims", claims},
          {"vandermonde", vander},
          {"bad_matrix", bad},
          {"pass", report.pass}};
}

}  // namespace hpsolve
