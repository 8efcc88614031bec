#pragma once

#include <cstdint>
#include <vector>

#include "stap/network.hpp"
#include "stap/weights.hpp"

namespace stap {

struct GenSpec {
  int degrees = 0;            // BFS radius N in the link-adjacency graph
  bool symmetric = true;
  double diagonal_min = 0.55; // in (0.5, 1]: strict diagonal dominance
  std::uint64_t seed = 0;
  // Restrict interactions to reverse-direction twin links (two-way roads)
  // instead of the N-degree neighborhoods.
  bool reverse_pairs_only = false;
};

// Links within N steps of a in the link-adjacency graph (adjacent iff they
// share an endpoint node), excluding a itself. Sorted ascending.
std::vector<int> link_neighbors(const Network& net, int a, int n_degrees);

// Deterministic per seed. Result is nonnegative, rows sum to 1, diagonal
// >= diagonal_min (strict dominance), and exactly symmetric in symmetric mode.
// Appends a warning when the construction degenerates to the identity.
SparseMatrix generate_weights(const Network& net, const GenSpec& spec,
                              WarningList* warnings = nullptr);

// lambda*W + (1-lambda)*(W + W^T)/2 on off-diagonals, diagonal re-filled to
// keep rows summing to 1. lambda=1 returns W, lambda=0 is exactly symmetric.
SparseMatrix interpolate_symmetry(const SparseMatrix& w, double lambda);

struct CondNumber {
  double value = 1.0;           // ratio of extreme eigenvalues / singular values
  bool spectral = false;        // true when singular values were used (asymmetric W)
  bool approximate = false;     // true when iterative methods were used (large W)
};

// Symmetric W: eigenvalue ratio (dense solve when n <= 500, otherwise power
// and shifted power iteration to 1e-8). Asymmetric W: singular-value ratio,
// flagged spectral. Smallest magnitude <= 1e-14 reports infinity.
CondNumber condition_number(const SparseMatrix& w);

}  // namespace stap
