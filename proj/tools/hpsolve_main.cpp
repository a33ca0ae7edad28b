// Command-line front end.
//
// Exit codes: 0 success (solve: residual contract met; validate: every
// claim met its quota), 1 input, I/O or argument error, 2 solve gave up
// after exhausting its resamples (or validate saw a claim miss its quota).

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>

#include "hpsolve/errors.hpp"
#include "hpsolve/hankel_solver.hpp"
#include "hpsolve/io.hpp"
#include "hpsolve/krylov.hpp"
#include "hpsolve/validation.hpp"

using namespace hpsolve;

namespace {

struct SolveArgs {
  std::string matrix, rhs, out, x_path;
  std::string epsilon = "1e-6";
  std::string kappa;
  std::size_t m = 0;
  int frac_words = 0;
  std::uint64_t seed = 1;
  double omega = 2.372864;
};

struct PlanArgs {
  double n = 0, nnz = 0, omega = 2.372864;
};

struct ValidateArgs {
  std::size_t trials = 20;
  std::size_t size = 64;
  std::uint64_t seed = 1;
  bool inject_failure = false;
  std::string out;
};

struct HankelArgs {
  std::string generator, rhs, out, save;
  std::string epsilon = "1e-30";
  double log2_alpha = -32.0;
  std::uint64_t seed = 1;
};

FixedPoint parse_positive(const std::string& text, const char* name) {
  FixedPoint v;
  try {
    v = FixedPoint::parse(text, 4);
  } catch (const std::invalid_argument&) {
    throw PreconditionError(std::string(name) + ": not a decimal number: '" + text + "'");
  }
  if (v.sign() <= 0) throw PreconditionError(std::string(name) + " must be positive");
  return v;
}

std::string default_x_path(const std::string& out) {
  const std::string ext = ".json";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
    return out.substr(0, out.size() - ext.size()) + ".x.mtx";
  return out + ".x.mtx";
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << j.dump(2) << '\n';
}

int run_solve(const SolveArgs& a) {
  const SparseMatrix A = mm_read_sparse(a.matrix);
  const DenseMatrix b = read_vector(a.rhs);
  if (b.rows() != A.rows()) throw PreconditionError("rhs has " + std::to_string(b.rows()) + " rows, matrix has " + std::to_string(A.rows()));
  const FixedPoint eps = parse_positive(a.epsilon, "epsilon");
  if (eps >= FixedPoint::from_int(1)) throw PreconditionError("epsilon must be below 1");
  const FixedPoint kappa = parse_positive(a.kappa, "kappa");
  if (kappa < FixedPoint::from_int(1)) throw PreconditionError("kappa must be at least 1");

  LeaOptions opt;
  opt.m = a.m;
  opt.frac_words = a.frac_words;
  opt.omega = a.omega;
  const SolveReport rep = lea(A, b, kappa, eps, a.seed, opt);

  const std::string x_path = a.x_path.empty() ? default_x_path(a.out) : a.x_path;
  if (!rep.x.empty()) write_vector(x_path, rep.x);
  write_json(a.out, solve_report_json(rep, x_path));
  std::cout << "n=" << A.cols() << " m=" << rep.m << " s=" << rep.s << " L=" << rep.L << " attempts=" << rep.attempts
            << " relative_residual=" << rep.relative_residual << " (" << rep.certified_by << ")\n";
  if (!rep.contract_met) {
    std::cerr << "solve: residual contract not met after " << rep.attempts << " attempts: " << rep.failure << '\n';
    return 2;
  }
  return 0;
}

int run_plan(const PlanArgs& a) {
  const MPlan p = plan_m(a.n, a.nnz, a.omega);
  std::cout << "m = " << p.m << "\nm_real = " << p.m_real << "\n";
  std::cout.precision(7);
  std::cout << std::fixed << "exponent = " << p.exponent << "\n";
  return 0;
}

int run_validate(const ValidateArgs& a) {
  ValidationConfig cfg;
  cfg.trials = a.trials;
  cfg.n = a.size;
  cfg.seed = a.seed;
  cfg.inject_failure = a.inject_failure;
  const ValidationReport rep = run_validation_suite(cfg);
  write_json(a.out, to_json(rep));
  for (const auto& c : rep.claims)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.id << " " << c.passed << "/" << c.trials.size() << " (quota " << c.quota << ")\n";
  return rep.pass ? 0 : 2;
}

int run_hankel(const HankelArgs& a) {
  const BlockGeneratorFile f = read_block_generator(a.generator);
  const DenseMatrix b = read_vector(a.rhs);
  HankelSolverOptions opt;
  opt.epsilon = parse_positive(a.epsilon, "epsilon");
  opt.log2_alpha = a.log2_alpha;
  opt.seed = a.seed;

  DenseMatrix x;
  BlockGeneratorFile saved;
  if (const auto* H = std::get_if<BlockHankel>(&f.content)) {
    if (b.rows() != H->s * H->m) throw PreconditionError("rhs height does not match the generator");
    const HankelSolver solver(*H, opt);
    x = solver.solve(b);
    saved.content = solver.toeplitz_inverse().inverse_rep();
    saved.reverse_output = true;
  } else {
    const auto& R = std::get<DisplacedRep>(f.content);
    if (b.rows() != R.n()) throw PreconditionError("rhs height does not match the generator");
    if (R.sign == DisplacementSign::plus) {
      const SolveOperator Z = recursive_sc(R.s, R.m, R.X, R.Y, opt);
      x = solve_apply(Z, b);
      saved.content = Z.inverse_rep();
    } else {
      // A stored operator: apply it.
      x = displaced_matvec(R, b, FixedPoint::pow2(-static_cast<long>(std::max(1, R.frac_words())) * kWordBits));
      if (f.reverse_output) x = reverse_row_blocks(x, R.s);
      saved = f;
    }
  }
  if (!a.save.empty()) write_block_generator(a.save, saved);
  if (a.out.empty()) {
    mm_write(std::cout, x);
  } else {
    write_vector(a.out, x);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-point block Krylov solver for sparse linear systems"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve A x = b (least squares) with the residual contract ||Ax - Pi b|| <= sqrt(eps) ||Pi b||");
  solve->add_option("--matrix", sa.matrix, "Matrix Market file for A")->required();
  solve->add_option("--rhs", sa.rhs, "Right-hand side (Matrix Market or one value per line)")->required();
  solve->add_option("--epsilon", sa.epsilon, "Accuracy parameter in (0, 1)")->capture_default_str();
  solve->add_option("--kappa", sa.kappa, "Upper bound on sigma_max / sigma_min of A")->required();
  solve->add_option("--m", sa.m, "Krylov steps (0: planner)");
  solve->add_option("--frac-words", sa.frac_words, "Fractional 64-bit words (0: derived)");
  solve->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
  solve->add_option("--omega", sa.omega, "Matrix multiplication exponent for the planner")->capture_default_str();
  solve->add_option("--out", sa.out, "JSON report path")->required();
  solve->add_option("--x", sa.x_path, "Solution path (default: <out>.x.mtx)");

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Print the Krylov step count and the predicted runtime exponent");
  plan->add_option("--n", pa.n, "Dimension")->required();
  plan->add_option("--nnz", pa.nnz, "Nonzero count")->required();
  plan->add_option("--omega", pa.omega, "Matrix multiplication exponent")->capture_default_str();

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Run the statistical spectral validation suite");
  validate->add_option("--trials", va.trials, "Trials per claim")->capture_default_str();
  validate->add_option("--size", va.size, "Matrix dimension")->capture_default_str();
  validate->add_option("--seed", va.seed, "Master seed")->capture_default_str();
  validate->add_flag("--inject-failure", va.inject_failure, "Tighten every threshold tenfold in log scale");
  validate->add_option("--out", va.out, "JSON report path")->required();

  HankelArgs ha;
  auto* hankel = app.add_subcommand("hankel-solve", "Solve with a block Hankel or displaced block Toeplitz matrix");
  hankel->add_option("--generator", ha.generator, "Block-generator file")->required();
  hankel->add_option("--rhs", ha.rhs, "Right-hand side")->required();
  hankel->add_option("--out", ha.out, "Solution path (default: stdout)");
  hankel->add_option("--epsilon", ha.epsilon, "Target accuracy")->capture_default_str();
  hankel->add_option("--log2-alpha", ha.log2_alpha, "log2 of the conditioning bound of every corner minor")->capture_default_str();
  hankel->add_option("--seed", ha.seed, "Sketch seed")->capture_default_str();
  hankel->add_option("--save-inverse", ha.save, "Write the inverse operator as a minus-displacement generator file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*solve) return run_solve(sa);
    if (*plan) return run_plan(pa);
    if (*validate) return run_validate(va);
    if (*hankel) return run_hankel(ha);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
