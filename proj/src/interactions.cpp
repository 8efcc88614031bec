#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>

#include <Eigen/Dense>

#include "stap/interactions.hpp"

namespace stap {

namespace {

// Deterministic uniform in [0,1): identical across platforms, unlike
// std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

Eigen::MatrixXd to_dense(const SparseMatrix& w) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(w.size(), w.size());
  for (int a = 0; a < w.size(); ++a)
    for (const auto* e = w.row_begin(a); e != w.row_end(a); ++e) m(a, e->col) = e->value;
  return m;
}

// Largest-magnitude eigenvalue of a symmetric operator, by power iteration
// with Rayleigh-quotient convergence. Returns the signed estimate.
template <typename MatVec>
double power_eigenvalue(int n, MatVec&& apply, double tol = 1e-10, int max_iters = 20000) {
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), av(n);
  double rho = 0;
  for (int it = 0; it < max_iters; ++it) {
    apply(v.data(), av.data());
    double num = 0, norm2 = 0;
    for (int i = 0; i < n; ++i) {
      num += v[i] * av[i];
      norm2 += av[i] * av[i];
    }
    double norm = std::sqrt(norm2);
    if (norm == 0) return 0;
    double next = num;  // v is unit, so v.Av is the Rayleigh quotient
    for (int i = 0; i < n; ++i) v[i] = av[i] / norm;
    if (it > 0 && std::abs(next - rho) <= tol * std::max(1.0, std::abs(next))) return next;
    rho = next;
  }
  return rho;
}

}  // namespace

std::vector<int> link_neighbors(const Network& net, int a, int n_degrees) {
  std::vector<int> result;
  if (n_degrees <= 0) return result;
  const int n = static_cast<int>(net.links.size());
  std::vector<int> dist(n, -1);
  dist[a] = 0;
  std::queue<int> frontier;
  frontier.push(a);
  while (!frontier.empty()) {
    int cur = frontier.front();
    frontier.pop();
    if (dist[cur] == n_degrees) continue;
    for (int node : {net.links[cur].tail, net.links[cur].head}) {
      auto visit = [&](int b) {
        if (dist[b] >= 0) return;
        dist[b] = dist[cur] + 1;
        result.push_back(b);
        frontier.push(b);
      };
      for (int b : net.out_links()[node]) visit(b);
      for (int b : net.in_links()[node]) visit(b);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

SparseMatrix generate_weights(const Network& net, const GenSpec& spec, WarningList* warnings) {
  const int n = static_cast<int>(net.links.size());
  if (spec.diagonal_min <= 0.5 || spec.diagonal_min > 1.0)
    throw input_error("diagonal minimum must lie in (0.5, 1] for strict dominance");

  // Enumerate unordered interacting pairs (a < b), in a fixed order so the
  // random draws are reproducible.
  std::vector<std::pair<int, int>> pairs;
  if (spec.reverse_pairs_only) {
    std::map<std::pair<int, int>, int> first_by_ends;
    for (int a = 0; a < n; ++a) {
      auto key = std::make_pair(net.links[a].tail, net.links[a].head);
      if (!first_by_ends.count(key)) first_by_ends[key] = a;
    }
    for (int a = 0; a < n; ++a) {
      auto rev = first_by_ends.find({net.links[a].head, net.links[a].tail});
      if (rev != first_by_ends.end() && rev->second > a) pairs.emplace_back(a, rev->second);
    }
  } else {
    for (int a = 0; a < n; ++a)
      for (int b : link_neighbors(net, a, spec.degrees))
        if (b > a) pairs.emplace_back(a, b);
  }

  if (pairs.empty()) {
    if (warnings)
      warnings->push_back("no interacting link pairs; weight matrix degenerates to identity");
    return SparseMatrix::identity(n);
  }

  std::mt19937_64 rng(spec.seed);
  struct PairDraw {
    int a, b;
    double u, v;
  };
  std::vector<PairDraw> draws;
  draws.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    double u = uniform01(rng);
    double v = spec.symmetric ? 0.5 : uniform01(rng);
    draws.push_back({a, b, u, v});
  }

  // Scale all raw magnitudes together so every off-diagonal row sum fits the
  // dominance budget. Asymmetric mode reserves a third of the budget for the
  // antisymmetric tilt, which moves up to half of each base weight.
  double budget = (1.0 - spec.diagonal_min) * (spec.symmetric ? 1.0 : 2.0 / 3.0);
  std::vector<double> raw_sum(n, 0.0);
  for (const auto& d : draws) {
    raw_sum[d.a] += d.u;
    raw_sum[d.b] += d.u;
  }
  double scale = std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a)
    if (raw_sum[a] > 0) scale = std::min(scale, budget / raw_sum[a]);
  if (!std::isfinite(scale) || scale <= 0) {
    if (warnings)
      warnings->push_back("all pair draws were zero; weight matrix degenerates to identity");
    return SparseMatrix::identity(n);
  }

  std::vector<std::vector<SparseMatrix::Entry>> rows(n);
  std::vector<double> off_sum(n, 0.0);
  for (const auto& d : draws) {
    double base = scale * d.u;
    double delta = (2.0 * d.v - 1.0) * base / 2.0;
    double w_ab = base + delta;
    double w_ba = base - delta;
    if (w_ab > 0) rows[d.a].push_back({d.b, w_ab});
    if (w_ba > 0) rows[d.b].push_back({d.a, w_ba});
    off_sum[d.a] += w_ab;
    off_sum[d.b] += w_ba;
  }
  for (int a = 0; a < n; ++a) rows[a].push_back({a, 1.0 - off_sum[a]});

  SparseMatrix w = finish_rows(n, std::move(rows));
  validate_weights(w);
  return w;
}

SparseMatrix interpolate_symmetry(const SparseMatrix& w, double lambda) {
  if (lambda < 0 || lambda > 1)
    throw input_error("symmetry interpolation parameter must lie in [0, 1]");
  const int n = w.size();
  std::vector<std::map<int, double>> rows(n);
  for (int a = 0; a < n; ++a) {
    for (const auto* e = w.row_begin(a); e != w.row_end(a); ++e) {
      if (e->col == a) continue;
      double direct = lambda * e->value + (1.0 - lambda) * e->value / 2.0;
      double mirrored = (1.0 - lambda) * e->value / 2.0;
      if (direct != 0) rows[a][e->col] += direct;
      if (mirrored != 0) rows[e->col][a] += mirrored;
    }
  }
  std::vector<std::vector<SparseMatrix::Entry>> out(n);
  for (int a = 0; a < n; ++a) {
    double off = 0;
    for (auto& [b, value] : rows[a]) {
      out[a].push_back({b, value});
      off += value;
    }
    double diag = 1.0 - off;
    if (diag < -1e-9)
      throw input_error("symmetry interpolation would break row-stochastic dominance");
    out[a].push_back({a, std::max(0.0, diag)});
  }
  SparseMatrix result = finish_rows(n, std::move(out));
  validate_weights(result);
  return result;
}

CondNumber condition_number(const SparseMatrix& w) {
  const int n = w.size();
  CondNumber result;
  if (n == 0) return result;
  constexpr double kSingularFloor = 1e-14;
  const bool symmetric = w.is_symmetric(0.0);

  double hi = 0, lo = 0;
  if (symmetric) {
    if (n <= 500) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_dense(w),
                                                            Eigen::EigenvaluesOnly);
      const auto& ev = solver.eigenvalues();
      hi = ev.cwiseAbs().maxCoeff();
      lo = ev.cwiseAbs().minCoeff();
    } else {
      result.approximate = true;
      auto apply = [&](const double* in, double* out) { w.multiply(in, out); };
      double rho = power_eigenvalue(n, apply);
      double c = std::abs(rho);
      // Row-stochastic dominant matrices are positive definite, so the
      // smallest-magnitude eigenvalue is the smallest one, reachable through
      // the shifted operator c*I - W.
      auto shifted = [&](const double* in, double* out) {
        w.multiply(in, out);
        for (int i = 0; i < n; ++i) out[i] = c * in[i] - out[i];
      };
      double mu = power_eigenvalue(n, shifted);
      hi = c;
      lo = std::abs(c - mu);
    }
  } else {
    result.spectral = true;
    if (n <= 500) {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(to_dense(w));
      hi = svd.singularValues()(0);
      lo = svd.singularValues()(n - 1);
    } else {
      result.approximate = true;
      SparseMatrix wt = w.transposed();
      std::vector<double> tmp(n);
      auto gram = [&](const double* in, double* out) {
        w.multiply(in, tmp.data());
        wt.multiply(tmp.data(), out);
      };
      double smax2 = std::abs(power_eigenvalue(n, gram));
      auto shifted = [&](const double* in, double* out) {
        gram(in, out);
        for (int i = 0; i < n; ++i) out[i] = smax2 * in[i] - out[i];
      };
      double mu = power_eigenvalue(n, shifted);
      hi = std::sqrt(smax2);
      lo = std::sqrt(std::max(0.0, smax2 - std::abs(mu)));
    }
  }

  result.value = (lo <= kSingularFloor) ? std::numeric_limits<double>::infinity() : hi / lo;
  return result;
}

}  // namespace stap
