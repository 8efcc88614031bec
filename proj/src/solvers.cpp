#include "stap/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

namespace stap {

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "msa") return Algorithm::msa;
  if (name == "fw") return Algorithm::fw;
  if (name == "gp") return Algorithm::gp;
  if (name == "algb") return Algorithm::algb;
  throw input_error("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::msa: return "msa";
    case Algorithm::fw: return "fw";
    case Algorithm::gp: return "gp";
    case Algorithm::algb: return "algb";
  }
  return "?";
}

GapInfo gap_info(const CostModel& model, const OdMatrix& od, std::span<const double> x,
                 std::span<const double> t) {
  GapInfo info;
  AonResult aon = all_or_nothing(model.network(), od, t);
  info.tstt = tstt(x, t);
  info.sptt = aon.sptt;
  info.aon_flows = std::move(aon.flows);
  info.rg = info.sptt > 0 ? std::max(0.0, (info.tstt - info.sptt) / info.sptt) : 0.0;
  return info;
}

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// Symmetric-difference link sets of two paths with signs +1 (L) / -1 (U);
// links common to both paths cancel.
std::vector<std::pair<int, int>> signed_difference(std::span<const int> path_l,
                                                   std::span<const int> path_u) {
  std::unordered_map<int, int> sign;
  for (int a : path_l) sign[a] += 1;
  for (int a : path_u) sign[a] -= 1;
  std::vector<std::pair<int, int>> members;
  members.reserve(sign.size());
  for (auto [a, s] : sign)
    if (s != 0) members.emplace_back(a, s);
  std::sort(members.begin(), members.end());
  return members;
}

std::vector<double> initial_flows(const CostModel& model, const OdMatrix& od) {
  std::vector<double> zero(model.num_links(), 0.0);
  auto t0 = model.link_times(zero);
  return all_or_nothing(model.network(), od, t0).flows;
}

std::optional<double> maybe_objective(const CostModel& model, const SolverConfig& config,
                                      std::span<const double> x) {
  if (!config.record_objective) return std::nullopt;
  return model.objective(x);
}

}  // namespace

double newton_denominator_general(const CostModel& model, std::span<const double> x,
                                  std::span<const int> path_l, std::span<const int> path_u) {
  auto members = signed_difference(path_l, path_u);
  std::unordered_map<int, int> sign;
  for (auto [a, s] : members) sign[a] = s;
  double denom = 0;
  const auto& m = model.interactions();
  for (auto [a, sa] : members) {
    double slope = model.slope_from_effective(a, model.effective_flow(x, a));
    if (slope == 0) continue;
    for (const auto* e = m.row_begin(a); e != m.row_end(a); ++e) {
      auto it = sign.find(e->col);
      if (it == sign.end()) continue;
      denom += sa * it->second * slope * e->value;
    }
  }
  return denom;
}

double newton_denominator_symmetric(const CostModel& model, std::span<const double> x,
                                    std::span<const int> path_l, std::span<const int> path_u) {
  auto members = signed_difference(path_l, path_u);
  std::unordered_map<int, int> sign;
  for (auto [a, s] : members) sign[a] = s;
  double sum_ll = 0, sum_uu = 0, sum_lu = 0;
  const auto& m = model.interactions();
  for (auto [a, sa] : members) {
    double slope = model.slope_from_effective(a, model.effective_flow(x, a));
    if (slope == 0) continue;
    for (const auto* e = m.row_begin(a); e != m.row_end(a); ++e) {
      auto it = sign.find(e->col);
      if (it == sign.end()) continue;
      double j = slope * e->value;
      if (sa > 0 && it->second > 0) sum_ll += j;
      else if (sa < 0 && it->second < 0) sum_uu += j;
      else if (sa > 0 && it->second < 0) sum_lu += j;
      // the UL block is folded into the doubled LU term
    }
  }
  return sum_ll + sum_uu - 2 * sum_lu;
}

double newton_shift(const CostModel& model, std::span<const double> x, std::span<const double> t,
                    std::span<const int> path_l, std::span<const int> path_u, double damping,
                    double cap) {
  auto members = signed_difference(path_l, path_u);
  if (members.empty()) return 0;

  double numerator = 0;
  double bound_l = kInf, bound_u = kInf;
  for (auto [a, s] : members) {
    if (s > 0) {
      numerator -= t[a];
      bound_l = std::min(bound_l, x[a]);
    } else {
      numerator += t[a];
      bound_u = std::min(bound_u, x[a]);
    }
  }
  if (numerator == 0) return 0;

  double denom = newton_denominator_general(model, x, path_l, path_u);
  if (denom <= 0) {
    denom = 0;
    for (auto [a, s] : members) {
      (void)s;
      denom += model.slope_from_effective(a, model.effective_flow(x, a)) *
               model.interactions().at(a, a);
    }
    if (denom <= 0) return 0;
  }

  double dx = damping * numerator / denom;
  if (dx > 0) return std::min({dx, bound_u, cap});
  return std::max({dx, -bound_l, -cap});
}

SolveResult msa_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config) {
  Stopwatch clock;
  SolveResult result;
  std::vector<double> x = initial_flows(model, od);

  for (long it = 1; it <= config.max_iterations; ++it) {
    auto t = model.link_times(x);
    GapInfo gap = gap_info(model, od, x, t);
    double wall = clock.seconds();
    result.log.iterations.push_back(
        {static_cast<int>(it), gap.rg, maybe_objective(model, config, x), wall});
    result.log.record_crossings(config.snapshot_levels, static_cast<int>(it), gap.rg, wall, x);
    result.iterations = static_cast<int>(it);
    if (gap.rg <= config.rg_target) {
      result.converged = true;
      break;
    }
    if (it == config.max_iterations) break;
    double lambda = 1.0 / (static_cast<double>(it) + 1.0);  // 1/2, 1/3, 1/4, ...
    for (int a = 0; a < model.num_links(); ++a)
      x[a] = (1.0 - lambda) * x[a] + lambda * gap.aon_flows[a];
  }

  result.state.x = std::move(x);
  result.state.t = model.link_times(result.state.x);
  result.log.converged = result.converged;
  result.log.final_rg = result.log.iterations.empty() ? 0 : result.log.iterations.back().rg;
  return result;
}

SolveResult fw_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config) {
  Stopwatch clock;
  SolveResult result;
  const int n = model.num_links();
  std::vector<double> x = initial_flows(model, od);
  std::vector<double> fx(n), fd(n), direction(n);

  for (long it = 1; it <= config.max_iterations; ++it) {
    auto t = model.link_times(x);
    GapInfo gap = gap_info(model, od, x, t);
    double wall = clock.seconds();
    result.log.iterations.push_back(
        {static_cast<int>(it), gap.rg, maybe_objective(model, config, x), wall});
    result.log.record_crossings(config.snapshot_levels, static_cast<int>(it), gap.rg, wall, x);
    result.iterations = static_cast<int>(it);
    if (gap.rg <= config.rg_target) {
      result.converged = true;
      break;
    }
    if (it == config.max_iterations) break;

    for (int a = 0; a < n; ++a) direction[a] = gap.aon_flows[a] - x[a];
    model.effective_flows(x, fx);
    model.effective_flows(direction, fd);
    auto deriv = [&](double lambda) {
      double g = 0;
      for (int a = 0; a < n; ++a)
        g += model.time_from_effective(a, fx[a] + lambda * fd[a]) * direction[a];
      return g;
    };
    // g(0) < 0 by AON optimality (rg > target here); take the full step when
    // the derivative never turns positive, otherwise bisect the sign change.
    double lambda = 1.0;
    if (deriv(1.0) > 0) {
      double lo = 0, hi = 1;
      while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (deriv(mid) < 0 ? lo : hi) = mid;
      }
      lambda = 0.5 * (lo + hi);
    }
    for (int a = 0; a < n; ++a) x[a] += lambda * direction[a];
  }

  result.state.x = std::move(x);
  result.state.t = model.link_times(result.state.x);
  result.log.converged = result.converged;
  result.log.final_rg = result.log.iterations.empty() ? 0 : result.log.iterations.back().rg;
  return result;
}

SolveResult solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config) {
  switch (config.algorithm) {
    case Algorithm::msa: return msa_solve(model, od, config);
    case Algorithm::fw: return fw_solve(model, od, config);
    case Algorithm::gp: return gp_solve(model, od, config);
    case Algorithm::algb: return algb_solve(model, od, config);
  }
  throw input_error("unknown algorithm tag");
}

}  // namespace stap
