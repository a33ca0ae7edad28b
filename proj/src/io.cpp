#include "hpsolve/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "hpsolve/errors.hpp"

namespace hpsolve {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

// Line reader that tracks line numbers and collects `% frac_words L` and
// other comment directives.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  /// Next non-blank, non-comment line split into tokens; false at EOF.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line[first] == '%') {
        comment(line.substr(first + 1));
        continue;
      }
      tokens = split(line);
      return true;
    }
    return false;
  }

  /// Raw next line (for the Matrix Market banner).
  bool raw(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  FixedPoint number(const std::string& tok, int words) const {
    try {
      return FixedPoint::parse(tok, words);
    } catch (const std::invalid_argument&) {
      fail("malformed number '" + tok + "'");
    }
  }

  std::size_t index(const std::string& tok, const char* what) const {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }))
      fail(std::string("malformed ") + what + " '" + tok + "'");
    try {
      return std::stoull(tok);
    } catch (const std::exception&) {
      fail(std::string(what) + " out of range '" + tok + "'");
    }
  }

  int words(int requested) const { return requested >= 0 ? requested : (file_words_ >= 0 ? file_words_ : kDefaultInputWords); }
  bool flag(const std::string& name) const { return std::find(flags_.begin(), flags_.end(), name) != flags_.end(); }
  std::size_t line_no() const { return line_no_; }

  void comment(const std::string& text) {
    const auto tok = split(text);
    if (tok.size() == 2 && tok[0] == "frac_words") {
      file_words_ = static_cast<int>(index(tok[1], "word count"));
    } else if (tok.size() == 1) {
      flags_.push_back(tok[0]);
    }
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
  int file_words_ = -1;
  std::vector<std::string> flags_;
};

struct MMBanner {
  bool coordinate = true;
  bool pattern = false;
  bool symmetric = false;
};

MMBanner read_banner(LineReader& r) {
  std::string line;
  if (!r.raw(line)) r.fail("empty file");
  const auto tok = split(line);
  if (tok.size() != 5 || lower(tok[0]) != "%%matrixmarket" || lower(tok[1]) != "matrix")
    r.fail("expected '%%MatrixMarket matrix <format> <field> <symmetry>'");
  MMBanner b;
  const std::string format = lower(tok[2]), field = lower(tok[3]), sym = lower(tok[4]);
  if (format == "array") {
    b.coordinate = false;
  } else if (format != "coordinate") {
    r.fail("unsupported format '" + tok[2] + "'");
  }
  if (field == "pattern") {
    if (!b.coordinate) r.fail("pattern field requires coordinate format");
    b.pattern = true;
  } else if (field != "real" && field != "integer") {
    r.fail("unsupported field '" + tok[3] + "'");
  }
  if (sym == "symmetric") {
    b.symmetric = true;
  } else if (sym != "general") {
    r.fail("unsupported symmetry '" + tok[4] + "'");
  }
  return b;
}

struct MMData {
  std::size_t rows = 0, cols = 0;
  std::vector<Triplet> triplets;
  int words = 0;
};

MMData read_mm(std::istream& in, const std::string& source, int frac_words) {
  LineReader r(in, source);
  const MMBanner b = read_banner(r);
  std::vector<std::string> tok;
  if (!r.next(tok)) r.fail("missing size line");
  MMData d;
  d.words = r.words(frac_words);
  if (b.coordinate) {
    if (tok.size() != 3) r.fail("size line must be 'rows cols nnz'");
    d.rows = r.index(tok[0], "row count");
    d.cols = r.index(tok[1], "column count");
    const std::size_t nnz = r.index(tok[2], "entry count");
    if (b.symmetric && d.rows != d.cols) r.fail("symmetric matrix must be square");
    for (std::size_t k = 0; k < nnz; ++k) {
      if (!r.next(tok)) r.fail("expected " + std::to_string(nnz) + " entries, found " + std::to_string(k));
      if (tok.size() != (b.pattern ? 2u : 3u)) r.fail("entry line has the wrong number of fields");
      const std::size_t i = r.index(tok[0], "row index");
      const std::size_t j = r.index(tok[1], "column index");
      if (i < 1 || i > d.rows || j < 1 || j > d.cols)
        r.fail("index (" + tok[0] + ", " + tok[1] + ") outside " + std::to_string(d.rows) + "x" + std::to_string(d.cols));
      if (b.symmetric && j > i) r.fail("symmetric file entry above the diagonal");
      const FixedPoint v = b.pattern ? FixedPoint::from_int(1) : r.number(tok[2], d.words);
      d.triplets.push_back({i - 1, j - 1, v});
      if (b.symmetric && i != j) d.triplets.push_back({j - 1, i - 1, v});
    }
  } else {
    if (tok.size() != 2) r.fail("size line must be 'rows cols'");
    d.rows = r.index(tok[0], "row count");
    d.cols = r.index(tok[1], "column count");
    if (b.symmetric && d.rows != d.cols) r.fail("symmetric matrix must be square");
    // Column-major; symmetric files list the lower triangle only.
    for (std::size_t j = 0; j < d.cols; ++j) {
      for (std::size_t i = b.symmetric ? j : 0; i < d.rows; ++i) {
        if (!r.next(tok)) r.fail("array data ended early");
        if (tok.size() != 1) r.fail("array lines hold one value");
        const FixedPoint v = r.number(tok[0], d.words);
        if (v.is_zero()) continue;
        d.triplets.push_back({i, j, v});
        if (b.symmetric && i != j) d.triplets.push_back({j, i, v});
      }
    }
  }
  if (r.next(tok)) r.fail("unexpected data after the last entry");
  return d;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  return out;
}

std::string fmt(const FixedPoint& v, int words) { return v.to_string(words == 0 ? 0 : round_trip_digits(words)); }

void write_rows(std::ostream& out, const DenseMatrix& M, int words) {
  for (std::size_t i = 0; i < M.rows(); ++i) {
    for (std::size_t j = 0; j < M.cols(); ++j) out << (j ? " " : "") << fmt(M.at(i, j), words);
    out << '\n';
  }
}

DenseMatrix read_rows(LineReader& r, std::size_t rows, std::size_t cols, int words) {
  DenseMatrix M(rows, cols, words);
  std::vector<std::string> tok;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!r.next(tok)) r.fail("data ended early: expected " + std::to_string(rows) + " rows");
    if (tok.size() != cols) r.fail("expected " + std::to_string(cols) + " values, found " + std::to_string(tok.size()));
    for (std::size_t j = 0; j < cols; ++j) M.set(i, j, r.number(tok[j], words));
  }
  return M;
}

}  // namespace

SparseMatrix mm_read_sparse(std::istream& in, int frac_words) {
  MMData d = read_mm(in, "<stream>", frac_words);
  return SparseMatrix(d.rows, d.cols, std::move(d.triplets));
}

SparseMatrix mm_read_sparse(const std::string& path, int frac_words) {
  auto in = open_in(path);
  MMData d = read_mm(in, path, frac_words);
  return SparseMatrix(d.rows, d.cols, std::move(d.triplets));
}

DenseMatrix mm_read_dense(std::istream& in, int frac_words) {
  const MMData d = read_mm(in, "<stream>", frac_words);
  DenseMatrix M(d.rows, d.cols, d.words);
  for (const auto& t : d.triplets) M.set(t.row, t.col, M.at(t.row, t.col) + t.value);
  return M;
}

DenseMatrix mm_read_dense(const std::string& path, int frac_words) {
  auto in = open_in(path);
  const MMData d = read_mm(in, path, frac_words);
  DenseMatrix M(d.rows, d.cols, d.words);
  for (const auto& t : d.triplets) M.set(t.row, t.col, M.at(t.row, t.col) + t.value);
  return M;
}

void mm_write(std::ostream& out, const SparseMatrix& A) {
  const int w = A.max_frac_words();
  out << "%%MatrixMarket matrix coordinate real general\n% frac_words " << w << '\n';
  out << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
  for (const auto& t : A.triplets()) out << t.row + 1 << ' ' << t.col + 1 << ' ' << fmt(t.value, w) << '\n';
}

void mm_write(std::ostream& out, const DenseMatrix& A) {
  const int w = A.frac_words();
  out << "%%MatrixMarket matrix array real general\n% frac_words " << w << '\n';
  out << A.rows() << ' ' << A.cols() << '\n';
  for (std::size_t j = 0; j < A.cols(); ++j)
    for (std::size_t i = 0; i < A.rows(); ++i) out << fmt(A.at(i, j), w) << '\n';
}

void mm_write(const std::string& path, const SparseMatrix& A) {
  auto out = open_out(path);
  mm_write(out, A);
}

void mm_write(const std::string& path, const DenseMatrix& A) {
  auto out = open_out(path);
  mm_write(out, A);
}

DenseMatrix read_vector(const std::string& path, int frac_words) {
  auto in = open_in(path);
  if (in.peek() == '%') return mm_read_dense(path, frac_words);
  LineReader r(in, path);
  std::vector<std::vector<std::string>> rows;
  for (std::vector<std::string> tok; r.next(tok);) {
    if (!rows.empty() && tok.size() != rows.front().size()) r.fail("rows have different lengths");
    rows.push_back(tok);
  }
  if (rows.empty()) throw ParseError(path + ": no values");
  const int w = r.words(frac_words);
  DenseMatrix x(rows.size(), rows.front().size(), w);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) x.set(i, j, r.number(rows[i][j], w));
  return x;
}

void write_vector(const std::string& path, const DenseMatrix& x) { mm_write(path, x); }

BlockGeneratorFile read_block_generator(std::istream& in, int frac_words) {
  LineReader r(in, "<generator>");
  std::vector<std::string> tok;
  if (!r.next(tok)) r.fail("missing header 's m sign r'");
  if (tok.size() != 4) r.fail("header must be 's m sign r'");
  const std::size_t s = r.index(tok[0], "block size");
  const std::size_t m = r.index(tok[1], "block count");
  const std::string sign = lower(tok[2]);
  const std::size_t rank = r.index(tok[3], "rank");
  if (s == 0 || m == 0) r.fail("block size and count must be positive");
  const int w = r.words(frac_words);
  BlockGeneratorFile f;
  if (sign == "hankel") {
    if (rank != 2 * m - 1) r.fail("hankel files hold 2m - 1 generator blocks");
    BlockHankel H{s, m, {}};
    for (std::size_t k = 0; k < rank; ++k) H.gen.push_back(read_rows(r, s, s, w));
    f.content = std::move(H);
  } else if (sign == "plus" || sign == "minus" || sign == "+" || sign == "-") {
    DisplacedRep R;
    R.s = s;
    R.m = m;
    R.sign = (sign == "plus" || sign == "+") ? DisplacementSign::plus : DisplacementSign::minus;
    R.X = read_rows(r, m * s, rank, w);
    R.Y = read_rows(r, m * s, rank, w);
    f.content = std::move(R);
  } else {
    r.fail("sign must be plus, minus or hankel");
  }
  if (r.next(tok)) r.fail("unexpected data after the last block");
  f.reverse_output = r.flag("reverse_output");
  return f;
}

BlockGeneratorFile read_block_generator(const std::string& path, int frac_words) {
  auto in = open_in(path);
  try {
    return read_block_generator(in, frac_words);
  } catch (const ParseError& e) {
    std::string msg = e.what();
    const std::string tag = "<generator>";
    if (msg.rfind(tag, 0) == 0) msg = path + msg.substr(tag.size());
    throw ParseError(msg);
  }
}

void write_block_generator(std::ostream& out, const BlockGeneratorFile& f) {
  if (const auto* H = std::get_if<BlockHankel>(&f.content)) {
    int w = 0;
    for (const auto& g : H->gen) w = std::max(w, g.frac_words());
    out << "% frac_words " << w << '\n';
    if (f.reverse_output) out << "% reverse_output\n";
    out << H->s << ' ' << H->m << " hankel " << H->gen.size() << '\n';
    for (const auto& g : H->gen) write_rows(out, g, w);
    return;
  }
  const auto& R = std::get<DisplacedRep>(f.content);
  const int w = R.frac_words();
  out << "% frac_words " << w << '\n';
  if (f.reverse_output) out << "% reverse_output\n";
  out << R.s << ' ' << R.m << ' ' << (R.sign == DisplacementSign::plus ? "plus" : "minus") << ' ' << R.rank() << '\n';
  write_rows(out, R.X, w);
  write_rows(out, R.Y, w);
}

void write_block_generator(const std::string& path, const BlockGeneratorFile& f) {
  auto out = open_out(path);
  write_block_generator(out, f);
}

nlohmann::json solve_report_json(const SolveReport& rep, const std::string& x_path) {
  using nlohmann::json;
  return {{"x_path", x_path},
          {"residual", rep.residual},
          {"relative_residual", rep.relative_residual},
          {"contract_met", rep.contract_met},
          {"certified_by", rep.certified_by},
          {"attempts", rep.attempts},
          {"failure", rep.failure},
          {"params",
           {{"m", rep.m},
            {"s", rep.s},
            {"h", rep.h},
            {"L", rep.L},
            {"seed", rep.seed},
            {"epsilon", rep.epsilon},
            {"kappa", rep.kappa},
            {"log2_alpha", rep.log2_alpha}}},
          {"words",
           {{"perturb", rep.words.perturb},
            {"krylov", rep.words.krylov},
            {"hankel_solve", rep.words.hankel_solve},
            {"pad", rep.words.pad},
            {"apply", rep.words.apply},
            {"budget", rep.budget_words}}},
          {"timings",
           {{"perturb", rep.timings.perturb},
            {"krylov", rep.timings.krylov},
            {"hankel_solve", rep.timings.hankel_solve},
            {"pad", rep.timings.pad},
            {"apply", rep.timings.apply}}}};
}

}  // namespace hpsolve
