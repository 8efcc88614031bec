#pragma once

#include <string>
#include <vector>

#include "stap/network.hpp"

namespace stap {

// Sparse square matrix over the link set, row-major with sorted columns.
// Used both for interaction weight matrices (validated: nonnegative rows
// summing to 1, diagonal present) and for raw linear cost coefficient
// matrices (unvalidated).
class SparseMatrix {
public:
  SparseMatrix() = default;
  explicit SparseMatrix(int n) : n_(n), row_start_(n + 1, 0) {}

  static SparseMatrix identity(int n);
  // triples (row, col, value); duplicates are an error
  static SparseMatrix from_triples(int n, std::vector<std::tuple<int, int, double>> triples);
  static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense, double drop_below = 0.0);

  int size() const { return n_; }
  int nnz() const { return static_cast<int>(cols_.size()); }

  struct Entry {
    int col;
    double value;
  };

  // Row a as (col, value) pairs sorted by col.
  const Entry* row_begin(int a) const { return entries_.data() + row_start_[a]; }
  const Entry* row_end(int a) const { return entries_.data() + row_start_[a + 1]; }

  double at(int a, int b) const;  // 0 when absent
  bool is_symmetric(double tol = 0.0) const;
  std::vector<double> row_sums() const;
  SparseMatrix transposed() const;

  // Column adjacency: for column b, the list of (row, value) with entry (row,b).
  // Built lazily; used for incremental effective-flow updates.
  const std::vector<std::vector<Entry>>& columns() const;

  // y = M x
  void multiply(const double* x, double* y) const;

  bool operator==(const SparseMatrix& other) const;

private:
  int n_ = 0;
  std::vector<int> row_start_;
  std::vector<int> cols_;  // parallel arrays, kept flat for locality
  std::vector<Entry> entries_;
  mutable std::vector<std::vector<Entry>> columns_;
  mutable bool columns_built_ = false;
  friend SparseMatrix finish_rows(int n, std::vector<std::vector<Entry>>&& rows);
};

SparseMatrix finish_rows(int n, std::vector<std::vector<SparseMatrix::Entry>>&& rows);

// Interaction-weight validation: every weight >= 0, every row sums to 1
// within 1e-9. Missing diagonal entries are inserted as explicit zeros so the
// diagonal is structurally present. Throws input_error on violation.
void validate_weights(const SparseMatrix& w);

// Weight file format: header "TAPW 1 <num_links>", then "a a' w" lines with
// 1-based link indices. Links without any entry default to identity rows.
SparseMatrix read_weights(const std::string& text, int num_links);
std::string write_weights(const SparseMatrix& w);

SparseMatrix load_weights_file(const std::string& path, int num_links);

}  // namespace stap
