#include "stap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "stap/solvers.hpp"

namespace stap {

double tstt(std::span<const double> x, std::span<const double> t) {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * t[i];
  return s;
}

double vmt(std::span<const double> x, std::span<const double> lengths) {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * lengths[i];
  return s;
}

double relative_gap(const CostModel& model, const OdMatrix& od, std::span<const double> x,
                    std::span<const double> times) {
  return gap_info(model, od, x, times).rg;
}

double relative_gap(const CostModel& model, const OdMatrix& od, std::span<const double> x) {
  auto times = model.link_times(x);
  return relative_gap(model, od, x, times);
}

DeltaMetrics delta_metrics(const CostModel& model, std::span<const double> x,
                           std::span<const double> x_ref) {
  const auto& links = model.network().links;
  std::vector<double> lengths(links.size());
  for (size_t i = 0; i < links.size(); ++i) lengths[i] = links[i].length;

  auto t = model.link_times(x);
  auto t_ref = model.link_times(x_ref);
  double tstt_ref = tstt(x_ref, t_ref);
  double vmt_ref = vmt(x_ref, lengths);
  if (tstt_ref == 0 || vmt_ref == 0)
    throw input_error("reference equilibrium has zero TSTT or VMT");
  DeltaMetrics d;
  d.delta_tstt = (tstt(x, t) - tstt_ref) / tstt_ref;
  d.delta_vmt = (vmt(x, lengths) - vmt_ref) / vmt_ref;
  return d;
}

double pul(std::span<const double> x, std::span<const double> x_ref, double epsilon,
           double zero_tol) {
  if (x.empty()) return 0;
  size_t converged = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    bool ok = x_ref[i] > zero_tol ? std::abs(x[i] - x_ref[i]) < epsilon * x_ref[i]
                                  : std::abs(x[i]) < zero_tol;
    if (ok) ++converged;
  }
  return 1.0 - static_cast<double>(converged) / static_cast<double>(x.size());
}

double default_zero_tol(double total_demand, int num_links) {
  return 1e-9 * total_demand / std::max(1, num_links);
}

void ConvergenceLog::record_crossings(std::span<const double> levels, int iteration, double rg,
                                      double wall_seconds, std::span<const double> x) {
  for (double level : levels) {
    if (rg > level) continue;
    bool seen = false;
    for (const auto& s : snapshots)
      if (s.level == level) {
        seen = true;
        break;
      }
    if (seen) continue;
    GapSnapshot snap;
    snap.level = level;
    snap.iteration = iteration;
    snap.rg = rg;
    snap.wall_seconds = wall_seconds;
    snap.x.assign(x.begin(), x.end());
    snapshots.push_back(std::move(snap));
  }
}

std::vector<MetricReport> snapshot_reports(const ConvergenceLog& log, const CostModel& model,
                                           std::span<const double> x_ref, double epsilon,
                                           double zero_tol) {
  std::vector<MetricReport> reports;
  reports.reserve(log.snapshots.size());
  for (const auto& snap : log.snapshots) {
    MetricReport r;
    r.gap_level = snap.level;
    r.epsilon = epsilon;
    DeltaMetrics d = delta_metrics(model, snap.x, x_ref);
    r.delta_tstt_signed = d.delta_tstt;
    r.delta_vmt_signed = d.delta_vmt;
    r.delta_tstt = std::abs(d.delta_tstt);
    r.delta_vmt = std::abs(d.delta_vmt);
    r.pul = pul(snap.x, x_ref, epsilon, zero_tol);
    reports.push_back(r);
  }
  return reports;
}

}  // namespace stap
