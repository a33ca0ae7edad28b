#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include <json.hpp>

#include "hpsolve/block_structured.hpp"
#include "hpsolve/krylov.hpp"
#include "hpsolve/matrix.hpp"

namespace hpsolve {

/// Word count used for decimal input when neither the caller nor a
/// `% frac_words L` comment gives one.
inline constexpr int kDefaultInputWords = 2;

// Matrix Market. Supported: `coordinate` and `array` formats with `real` or
// `integer` fields (plus `pattern` for coordinate), `general` or `symmetric`
// symmetry. Symmetric files store the lower triangle and are mirrored on
// read. Writers add a `% frac_words L` comment so a read at the recorded
// precision reproduces the matrix bitwise. Malformed input throws ParseError
// naming the offending line.

/// frac_words < 0 means: take the count from the file comment, else the default.
SparseMatrix mm_read_sparse(std::istream& in, int frac_words = -1);
SparseMatrix mm_read_sparse(const std::string& path, int frac_words = -1);
DenseMatrix mm_read_dense(std::istream& in, int frac_words = -1);
DenseMatrix mm_read_dense(const std::string& path, int frac_words = -1);

void mm_write(std::ostream& out, const SparseMatrix& A);
void mm_write(std::ostream& out, const DenseMatrix& A);
void mm_write(const std::string& path, const SparseMatrix& A);
void mm_write(const std::string& path, const DenseMatrix& A);

/// Right-hand sides and solutions: a Matrix Market file (array or
/// coordinate) or a plain list of decimals, one row per line.
DenseMatrix read_vector(const std::string& path, int frac_words = -1);
void write_vector(const std::string& path, const DenseMatrix& x);

// Block-generator files. Header line `s m sign r`, then data rows of
// decimals:
//   sign `plus` / `minus`: r is the displacement rank; m s rows of X
//   (r values each) followed by m s rows of Y.
//   sign `hankel`: r = 2m - 1 generator blocks, each s rows of s values,
//   block k holding H_{ij} for i + j = k.
// `%` lines are comments; `% frac_words L` sets the parse precision and
// `% reverse_output` marks a stored operator whose output row blocks are
// reversed (the inverse of a Hankel matrix stored through T = H J).
struct BlockGeneratorFile {
  std::variant<DisplacedRep, BlockHankel> content;
  bool reverse_output = false;
};

BlockGeneratorFile read_block_generator(std::istream& in, int frac_words = -1);
BlockGeneratorFile read_block_generator(const std::string& path, int frac_words = -1);
void write_block_generator(std::ostream& out, const BlockGeneratorFile& file);
void write_block_generator(const std::string& path, const BlockGeneratorFile& file);

/// SolveReport as JSON: x_path, residual, params {m, s, h, L, seed,
/// epsilon, kappa} and timings {perturb, krylov, hankel_solve, pad, apply},
/// plus contract and word-ledger diagnostics.
nlohmann::json solve_report_json(const SolveReport& report, const std::string& x_path);

}  // namespace hpsolve
