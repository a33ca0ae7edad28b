#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "hpsolve/hankel_solver.hpp"
#include "hpsolve/io.hpp"
#include "hpsolve/spectral.hpp"
#include "hpsolve/validation.hpp"
#include "test_support.hpp"

using namespace hpsolve;
using hpsolve::testing::krylov_hankel;
using hpsolve::testing::log2_diff;
using hpsolve::testing::random_matrix;
using hpsolve::testing::spaced;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(HPSOLVE_CLI_PATH) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("hpsolve_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

nlohmann::json load(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_F(Cli, PlanPrintsExponent) {
  const CliRun r = run("plan --n 1000000 --nnz 1000000 --omega 2.372864");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("exponent = 2.3316446"), std::string::npos) << r.out;
  EXPECT_EQ(run("plan --n 100 --nnz 100 --omega 3.5").code, 1);
}

TEST_F(Cli, IdentitySolvesToRhs) {
  mm_write(path("I.mtx"), SparseMatrix::identity(10));
  std::mt19937_64 rng(100);
  const DenseMatrix b = random_matrix(10, 1, rng, 1);
  write_vector(path("b.mtx"), b);
  const CliRun r = run("solve --matrix " + path("I.mtx") + " --rhs " + path("b.mtx") + " --kappa 1 --epsilon 1e-6 --out " +
                    path("r.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = load(path("r.json"));
  const DenseMatrix x = read_vector(j.at("x_path").get<std::string>());
  EXPECT_LT(log2_diff(x, b), -20.0);
  for (const char* k : {"m", "s", "h", "L", "seed", "epsilon", "kappa"}) EXPECT_TRUE(j.at("params").contains(k));
  for (const char* k : {"perturb", "krylov", "hankel_solve", "pad", "apply"}) EXPECT_TRUE(j.at("timings").contains(k));
}

TEST_F(Cli, ErrorsExitOne) {
  EXPECT_EQ(run("solve --matrix " + path("missing.mtx") + " --rhs x --kappa 1 --out " + path("r.json")).code, 1);
  EXPECT_EQ(run("solve --kappa 1").code, 1);
  EXPECT_EQ(run("").code, 1);
  std::ofstream(path("bad.mtx")) << "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 3 1\n";
  std::ofstream(path("b.txt")) << "1\n2\n";
  const CliRun r = run("solve --matrix " + path("bad.mtx") + " --rhs " + path("b.txt") + " --kappa 1 --out " + path("r.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find(":3:"), std::string::npos) << r.out;
  mm_write(path("I.mtx"), SparseMatrix::identity(2));
  EXPECT_EQ(run("solve --matrix " + path("I.mtx") + " --rhs " + path("b.txt") + " --kappa 1 --epsilon 2 --out " + path("r.json")).code, 1);
}

TEST_F(Cli, RandomSparseFixtureIsDeterministic) {
  // Consistent system with a known solution.
  const TestSystem sys = random_spd_system(64, 5, 1e3, 101);
  std::mt19937_64 rng(102);
  const DenseMatrix x_true = random_matrix(64, 1, rng, 1);
  const DenseMatrix b = sparse_matvec(sys.A, x_true);
  mm_write(path("A.mtx"), sys.A);
  write_vector(path("b.mtx"), b);
  const std::string base = "solve --matrix " + path("A.mtx") + " --rhs " + path("b.mtx") + " --kappa " +
                           sys.kappa.to_string(0) + " --epsilon 1e-6 --seed 5 ";
  ASSERT_EQ(run(base + "--out " + path("r1.json")).code, 0);
  ASSERT_EQ(run(base + "--out " + path("r2.json")).code, 0);
  auto j1 = load(path("r1.json")), j2 = load(path("r2.json"));
  EXPECT_LE(j1.at("relative_residual").get<double>(), 1e-6);
  const DenseMatrix x = read_vector(j1.at("x_path").get<std::string>());
  EXPECT_LT(log2_diff(x, x_true), std::log2(1e-6));
  j1.erase("timings");
  j2.erase("timings");
  j1.erase("x_path");
  j2.erase("x_path");
  EXPECT_EQ(j1.dump(), j2.dump());
  EXPECT_TRUE(x.bitwise_equal(read_vector(path("r2.x.mtx"))));
}

TEST_F(Cli, HankelSolveAndReuse) {
  std::mt19937_64 rng(103);
  const BlockHankel H = krylov_hankel(spaced(10, 0.1, 0.9), 2, 3, rng);
  write_block_generator(path("H.gen"), {H, false});
  const DenseMatrix b = random_matrix(6, 2, rng, 1);
  write_vector(path("b.mtx"), b);
  const std::string common = "--rhs " + path("b.mtx") + " --epsilon 1e-30 --log2-alpha -40 ";
  const CliRun r = run("hankel-solve --generator " + path("H.gen") + " " + common + "--out " + path("x.mtx") +
                    " --save-inverse " + path("Z.gen"));
  ASSERT_EQ(r.code, 0) << r.out;
  const DenseMatrix exact = mat_mul_exact(dense_inverse_oracle(H.densify(), FixedPoint::pow2(-300)), b);
  const DenseMatrix x = read_vector(path("x.mtx"));
  EXPECT_LT(log2_diff(x, exact), std::log2(1e-30) + 10);

  // The saved inverse applies without rebuilding.
  ASSERT_EQ(run("hankel-solve --generator " + path("Z.gen") + " " + common + "--out " + path("x2.mtx")).code, 0);
  EXPECT_LT(log2_diff(read_vector(path("x2.mtx")), exact), std::log2(1e-30) + 10);
  EXPECT_EQ(run("hankel-solve --generator " + path("missing.gen") + " " + common).code, 1);
}

TEST_F(Cli, ValidateReportsAndFailsWhenInjected) {
  const CliRun ok = run("validate --trials 2 --size 32 --out " + path("v.json"));
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(load(path("v.json")).at("claims").size(), 4u);
  const CliRun bad = run("validate --trials 2 --size 32 --inject-failure --out " + path("v2.json"));
  EXPECT_EQ(bad.code, 2) << bad.out;
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, StarvedPrecisionExitsTwo) {
  const TestSystem sys = random_spd_system(24, 5, 1e4, 5);
  mm_write(path("A.mtx"), sys.A);
  write_vector(path("b.mtx"), sys.b);
  const CliRun r = run("solve --matrix " + path("A.mtx") + " --rhs " + path("b.mtx") + " --kappa " + sys.kappa.to_string(0) +
                       " --epsilon 1e-6 --seed 3 --frac-words 1 --out " + path("r.json"));
  EXPECT_EQ(r.code, 2) << r.out;
  const auto j = load(path("r.json"));
  EXPECT_FALSE(j.at("contract_met").get<bool>());
  EXPECT_EQ(j.at("attempts"), 4);
}

TEST_F(Cli, PlusGeneratorsSolveToeplitz) {
  std::mt19937_64 rng(104);
  // Diagonally dominant block Toeplitz: every leading minor is well conditioned.
  BlockToeplitz T{2, 3, {}};
  for (std::size_t k = 0; k < 5; ++k)
    T.gen.push_back(k == 2 ? random_matrix(2, 2, rng, 1).scaled_pow2(-3) + DenseMatrix::identity(2)
                           : random_matrix(2, 2, rng, 1).scaled_pow2(-4));
  write_block_generator(path("T.gen"), {toeplitz_generators(T), false});
  const DenseMatrix b = random_matrix(6, 1, rng, 1);
  write_vector(path("b.mtx"), b);
  const CliRun r = run("hankel-solve --generator " + path("T.gen") + " --rhs " + path("b.mtx") +
                       " --epsilon 1e-30 --log2-alpha -8 --out " + path("x.mtx"));
  ASSERT_EQ(r.code, 0) << r.out;
  const DenseMatrix exact = mat_mul_exact(dense_inverse_oracle(T.densify(), FixedPoint::pow2(-300)), b);
  EXPECT_LT(log2_diff(read_vector(path("x.mtx")), exact), std::log2(1e-30) + 10);
}
