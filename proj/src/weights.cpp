#include "stap/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace stap {

SparseMatrix finish_rows(int n, std::vector<std::vector<SparseMatrix::Entry>>&& rows) {
  SparseMatrix m(n);
  int nnz = 0;
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.col < b.col; });
    nnz += static_cast<int>(row.size());
  }
  m.entries_.reserve(nnz);
  m.cols_.reserve(nnz);
  for (int a = 0; a < n; ++a) {
    m.row_start_[a] = static_cast<int>(m.entries_.size());
    for (const auto& e : rows[a]) {
      m.entries_.push_back(e);
      m.cols_.push_back(e.col);
    }
  }
  m.row_start_[n] = static_cast<int>(m.entries_.size());
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<std::vector<Entry>> rows(n);
  for (int a = 0; a < n; ++a) rows[a].push_back({a, 1.0});
  return finish_rows(n, std::move(rows));
}

SparseMatrix SparseMatrix::from_triples(int n, std::vector<std::tuple<int, int, double>> triples) {
  std::vector<std::vector<Entry>> rows(n);
  for (const auto& [r, c, v] : triples) {
    if (r < 0 || r >= n || c < 0 || c >= n)
      throw input_error("matrix entry index out of range: (" + std::to_string(r + 1) + ", " +
                        std::to_string(c + 1) + ")");
    rows[r].push_back({c, v});
  }
  for (int a = 0; a < n; ++a) {
    auto& row = rows[a];
    std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.col < y.col; });
    for (size_t i = 1; i < row.size(); ++i)
      if (row[i].col == row[i - 1].col)
        throw input_error("duplicate matrix entry at (" + std::to_string(a + 1) + ", " +
                          std::to_string(row[i].col + 1) + ")");
  }
  return finish_rows(n, std::move(rows));
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense,
                                      double drop_below) {
  int n = static_cast<int>(dense.size());
  std::vector<std::vector<Entry>> rows(n);
  for (int a = 0; a < n; ++a) {
    if (static_cast<int>(dense[a].size()) != n) throw input_error("dense matrix is not square");
    for (int b = 0; b < n; ++b)
      if (a == b || std::abs(dense[a][b]) > drop_below) rows[a].push_back({b, dense[a][b]});
  }
  return finish_rows(n, std::move(rows));
}

double SparseMatrix::at(int a, int b) const {
  const Entry* lo = row_begin(a);
  const Entry* hi = row_end(a);
  auto it = std::lower_bound(lo, hi, b, [](const Entry& e, int col) { return e.col < col; });
  if (it != hi && it->col == b) return it->value;
  return 0;
}

bool SparseMatrix::is_symmetric(double tol) const {
  for (int a = 0; a < n_; ++a)
    for (const Entry* e = row_begin(a); e != row_end(a); ++e)
      if (std::abs(e->value - at(e->col, a)) > tol) return false;
  return true;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> sums(n_, 0.0);
  for (int a = 0; a < n_; ++a)
    for (const Entry* e = row_begin(a); e != row_end(a); ++e) sums[a] += e->value;
  return sums;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<std::vector<Entry>> rows(n_);
  for (int a = 0; a < n_; ++a)
    for (const Entry* e = row_begin(a); e != row_end(a); ++e) rows[e->col].push_back({a, e->value});
  return finish_rows(n_, std::move(rows));
}

const std::vector<std::vector<SparseMatrix::Entry>>& SparseMatrix::columns() const {
  if (!columns_built_) {
    columns_.assign(n_, {});
    for (int a = 0; a < n_; ++a)
      for (const Entry* e = row_begin(a); e != row_end(a); ++e)
        columns_[e->col].push_back({a, e->value});
    columns_built_ = true;
  }
  return columns_;
}

void SparseMatrix::multiply(const double* x, double* y) const {
  for (int a = 0; a < n_; ++a) {
    double s = 0;
    for (const Entry* e = row_begin(a); e != row_end(a); ++e) s += e->value * x[e->col];
    y[a] = s;
  }
}

bool SparseMatrix::operator==(const SparseMatrix& other) const {
  if (n_ != other.n_ || row_start_ != other.row_start_) return false;
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].col != other.entries_[i].col || entries_[i].value != other.entries_[i].value)
      return false;
  return true;
}

void validate_weights(const SparseMatrix& w) {
  for (int a = 0; a < w.size(); ++a) {
    double sum = 0;
    for (const auto* e = w.row_begin(a); e != w.row_end(a); ++e) {
      if (e->value < 0)
        throw input_error("negative weight at (" + std::to_string(a + 1) + ", " +
                          std::to_string(e->col + 1) + ")");
      sum += e->value;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw input_error("weight row " + std::to_string(a + 1) + " sums to " + format_g17(sum) +
                        ", expected 1");
  }
}

namespace {

// Ensures every row has an explicit diagonal entry (zero when absent).
SparseMatrix with_diagonal(const SparseMatrix& m) {
  std::vector<std::vector<SparseMatrix::Entry>> rows(m.size());
  bool changed = false;
  for (int a = 0; a < m.size(); ++a) {
    bool has_diag = false;
    for (const auto* e = m.row_begin(a); e != m.row_end(a); ++e) {
      rows[a].push_back(*e);
      if (e->col == a) has_diag = true;
    }
    if (!has_diag) {
      rows[a].push_back({a, 0.0});
      changed = true;
    }
  }
  if (!changed) return m;
  return finish_rows(m.size(), std::move(rows));
}

}  // namespace

SparseMatrix read_weights(const std::string& text, int num_links) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  long n = 0;
  if (!(in >> magic >> version >> n) || magic != "TAPW")
    throw input_error("weight file missing 'TAPW 1 <num_links>' header");
  if (version != 1) throw input_error("unsupported weight file version");
  if (n != num_links)
    throw input_error("weight file declares " + std::to_string(n) + " links, network has " +
                      std::to_string(num_links));

  std::vector<std::tuple<int, int, double>> triples;
  long a = 0, b = 0;
  double v = 0;
  while (in >> a >> b >> v) {
    if (a < 1 || a > n || b < 1 || b > n)
      throw input_error("weight entry (" + std::to_string(a) + ", " + std::to_string(b) +
                        ") out of range [1, " + std::to_string(n) + "]");
    if (v < 0)
      throw input_error("negative weight at (" + std::to_string(a) + ", " + std::to_string(b) +
                        ")");
    triples.emplace_back(static_cast<int>(a - 1), static_cast<int>(b - 1), v);
  }
  if (!in.eof()) throw input_error("malformed weight entry (expected 'a b w' numeric triples)");

  std::vector<char> has_row(num_links, 0);
  for (const auto& [r, c, val] : triples) {
    (void)c;
    (void)val;
    has_row[r] = 1;
  }
  for (int row = 0; row < num_links; ++row)
    if (!has_row[row]) triples.emplace_back(row, row, 1.0);

  SparseMatrix w = with_diagonal(SparseMatrix::from_triples(num_links, std::move(triples)));
  validate_weights(w);
  return w;
}

std::string write_weights(const SparseMatrix& w) {
  std::ostringstream out;
  out << "TAPW 1 " << w.size() << "\n";
  for (int a = 0; a < w.size(); ++a)
    for (const auto* e = w.row_begin(a); e != w.row_end(a); ++e)
      out << a + 1 << " " << e->col + 1 << " " << format_g17(e->value) << "\n";
  return out.str();
}

SparseMatrix load_weights_file(const std::string& path, int num_links) {
  return read_weights(read_text_file(path), num_links);
}

}  // namespace stap
