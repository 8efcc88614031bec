#include "stap/cost_model.hpp"

#include <cmath>
#include <functional>

namespace stap {

namespace {

// x^p with a fast path for small integer exponents (BPR powers are almost
// always 4).
double pow_checked(double x, double p) {
  if (x < 0) x = 0;
  double ip = 0;
  if (std::modf(p, &ip) == 0.0 && ip >= 0 && ip <= 16) {
    double r = 1, base = x;
    auto e = static_cast<unsigned>(ip);
    while (e) {
      if (e & 1u) r *= base;
      base *= base;
      e >>= 1u;
    }
    return r;
  }
  return std::pow(x, p);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

CostModel CostModel::bpr_separable(const Network& net) {
  CostModel m;
  m.net_ = std::make_shared<Network>(net);
  m.family_ = Family::bpr;
  m.kind_ = Kind::separable;
  m.symmetric_ = true;
  m.interactions_ = SparseMatrix::identity(net.num_links());
  return m;
}

CostModel CostModel::bpr_interacting(const Network& net, SparseMatrix weights) {
  if (weights.size() != net.num_links())
    throw input_error("weight matrix size does not match link count");
  validate_weights(weights);
  CostModel m;
  m.net_ = std::make_shared<Network>(net);
  m.family_ = Family::bpr;
  m.interactions_ = std::move(weights);
  m.kind_ = m.interactions_ == SparseMatrix::identity(net.num_links()) ? Kind::separable
                                                                       : Kind::interacting;
  m.symmetric_ = m.interactions_.is_symmetric(0.0);
  return m;
}

CostModel CostModel::linear(const Network& net, std::vector<double> constants,
                            SparseMatrix coeffs) {
  if (coeffs.size() != net.num_links() ||
      static_cast<int>(constants.size()) != net.num_links())
    throw input_error("linear cost model size does not match link count");
  CostModel m;
  m.net_ = std::make_shared<Network>(net);
  m.family_ = Family::linear;
  m.interactions_ = std::move(coeffs);
  m.linear_constants_ = std::move(constants);
  bool diagonal = true;
  for (int a = 0; a < m.interactions_.size() && diagonal; ++a)
    for (const auto* e = m.interactions_.row_begin(a); e != m.interactions_.row_end(a); ++e)
      if (e->col != a && e->value != 0) {
        diagonal = false;
        break;
      }
  m.kind_ = diagonal ? Kind::separable : Kind::interacting;
  m.symmetric_ = m.interactions_.is_symmetric(0.0);
  return m;
}

double CostModel::effective_flow(std::span<const double> x, int a) const {
  double s = 0;
  for (const auto* e = interactions_.row_begin(a); e != interactions_.row_end(a); ++e)
    s += e->value * x[e->col];
  return s;
}

void CostModel::effective_flows(std::span<const double> x, std::span<double> f_out) const {
  interactions_.multiply(x.data(), f_out.data());
}

double CostModel::time_from_effective(int a, double f) const {
  if (family_ == Family::linear) return linear_constants_[a] + f;
  const Link& l = net_->links[a];
  return l.free_flow_time * (1.0 + l.bpr_b * pow_checked(f / l.capacity, l.bpr_power));
}

double CostModel::slope_from_effective(int a, double f) const {
  if (family_ == Family::linear) return 1.0;
  const Link& l = net_->links[a];
  if (l.bpr_power == 0 || l.bpr_b == 0) return 0.0;
  if (f <= 0 && l.bpr_power < 1) return 0.0;  // derivative blows up; pinned for determinism
  return l.free_flow_time * l.bpr_b * l.bpr_power *
         pow_checked(f, l.bpr_power - 1) / pow_checked(l.capacity, l.bpr_power);
}

double CostModel::link_time(std::span<const double> x, int a) const {
  return time_from_effective(a, effective_flow(x, a));
}

std::vector<double> CostModel::link_times(std::span<const double> x) const {
  std::vector<double> t(num_links());
  interactions_.multiply(x.data(), t.data());
  for (int a = 0; a < num_links(); ++a) t[a] = time_from_effective(a, t[a]);
  return t;
}

double CostModel::cost_jacobian_entry(std::span<const double> x, int a, int b) const {
  double w = interactions_.at(a, b);
  if (w == 0) return 0;
  return slope_from_effective(a, effective_flow(x, a)) * w;
}

double CostModel::beckmann_objective(std::span<const double> x) const {
  if (kind_ != Kind::separable)
    throw input_error("Beckmann objective is defined for separable models only");
  double total = 0;
  for (int a = 0; a < num_links(); ++a) {
    double xa = x[a];
    if (family_ == Family::linear) {
      total += linear_constants_[a] * xa + 0.5 * interactions_.at(a, a) * xa * xa;
    } else {
      const Link& l = net_->links[a];
      total += l.free_flow_time *
               (xa + l.bpr_b * xa * pow_checked(xa / l.capacity, l.bpr_power) / (l.bpr_power + 1));
    }
  }
  return total;
}

double CostModel::line_integral_objective(std::span<const double> x, bool* heuristic) const {
  if (heuristic) *heuristic = !symmetric_;
  double total = 0;
  // Axis-ordered path: coordinate a sweeps [0, x_a] with earlier coordinates
  // at their final values and later ones at zero, so the effective flow seen
  // by link a is alpha_a + beta_a * s with alpha from strictly-lower columns.
  for (int a = 0; a < num_links(); ++a) {
    double xa = x[a];
    if (xa == 0) continue;
    double alpha = 0, beta = 0;
    for (const auto* e = interactions_.row_begin(a); e != interactions_.row_end(a); ++e) {
      if (e->col < a) alpha += e->value * x[e->col];
      else if (e->col == a) beta = e->value;
    }
    if (family_ == Family::linear) {
      total += (linear_constants_[a] + alpha) * xa + 0.5 * beta * xa * xa;
    } else {
      double tol = 1e-8 * (1.0 + std::abs(total));
      total += integrate(
          [&](double s) { return time_from_effective(a, alpha + beta * s); }, 0.0, xa, tol);
    }
  }
  return total;
}

std::optional<double> CostModel::objective(std::span<const double> x) const {
  if (kind_ == Kind::separable) return beckmann_objective(x);
  if (symmetric_) return line_integral_objective(x);
  return std::nullopt;
}

std::array<double, 2> jin_zhang_times(const MergeNode& m, double x1, double x2) {
  double load = x1 + x2;
  if (load <= m.u3) return {m.t0_1, m.t0_2};
  double delay = m.delay_coef * (load / m.u3 - 1.0);
  return {m.t0_1 + delay, m.t0_2 + delay};
}

std::array<double, 4> jin_zhang_jacobian(const MergeNode& m, double x1, double x2) {
  if (x1 + x2 < m.u3) return {0, 0, 0, 0};
  double d = m.delay_coef / m.u3;  // kink at saturation reports the congested branch
  return {d, d, d, d};
}

}  // namespace stap
