#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "stap/network.hpp"
#include "stap/weights.hpp"

namespace stap {

// Link performance model: per-link response curve g_a applied to an effective
// flow f_a = sum_a' M[a,a'] x_a'. Two families:
//   bpr:    g_a(f) = fft*(1 + b*(f/c)^p), M is a validated weight matrix
//   linear: g_a(f) = c0_a + f,            M is a raw coefficient matrix
class CostModel {
public:
  enum class Kind { separable, interacting };
  enum class Family { bpr, linear };

  CostModel() = default;  // empty model; assign from a factory before use

  static CostModel bpr_separable(const Network& net);
  static CostModel bpr_interacting(const Network& net, SparseMatrix weights);
  static CostModel linear(const Network& net, std::vector<double> constants, SparseMatrix coeffs);

  Kind kind() const { return kind_; }
  Family family() const { return family_; }
  bool symmetric() const { return symmetric_; }
  int num_links() const { return interactions_.size(); }
  const Network& network() const { return *net_; }
  const SparseMatrix& interactions() const { return interactions_; }

  double effective_flow(std::span<const double> x, int a) const;
  void effective_flows(std::span<const double> x, std::span<double> f_out) const;

  double time_from_effective(int a, double f) const;
  // d g_a / d f evaluated at f (BPR derivative or 1 for linear).
  double slope_from_effective(int a, double f) const;

  double link_time(std::span<const double> x, int a) const;
  std::vector<double> link_times(std::span<const double> x) const;

  // dt_a/dx_b = g_a'(f_a) * M[a,b]
  double cost_jacobian_entry(std::span<const double> x, int a, int b) const;

  // Separable objective, closed form. Throws input_error for interacting kind.
  double beckmann_objective(std::span<const double> x) const;

  // Line integral along the axis-ordered path. For asymmetric interactions the
  // value is path-dependent; *heuristic is set true in that case.
  double line_integral_objective(std::span<const double> x, bool* heuristic = nullptr) const;

  // Objective used for convergence logging, when one exists.
  std::optional<double> objective(std::span<const double> x) const;

private:
  // Owned snapshot so models stay valid when the source network moves.
  std::shared_ptr<const Network> net_;
  Kind kind_ = Kind::separable;
  Family family_ = Family::bpr;
  bool symmetric_ = true;
  SparseMatrix interactions_;
  std::vector<double> linear_constants_;
};

// Two-inflow merge with a downstream bottleneck: below saturation the travel
// times are the free-flow values; above it both inflows see the same queueing
// delay delay_coef*((x1+x2)/u3 - 1).
struct MergeNode {
  double t0_1 = 0;
  double t0_2 = 0;
  double u3 = 1;
  double delay_coef = 1.0;
};

std::array<double, 2> jin_zhang_times(const MergeNode& m, double x1, double x2);
// Row-major 2x2 Jacobian d t_i / d x_j; the kink at x1+x2 == u3 reports the
// congested branch.
std::array<double, 4> jin_zhang_jacobian(const MergeNode& m, double x1, double x2);

}  // namespace stap
