#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "stap/cost_model.hpp"
#include "stap/graph.hpp"
#include "stap/network.hpp"

namespace stap {

double tstt(std::span<const double> x, std::span<const double> t);
double vmt(std::span<const double> x, std::span<const double> lengths);

// (TSTT - SPTT) / SPTT at times t(x); 0 when there is no demand; never negative.
double relative_gap(const CostModel& model, const OdMatrix& od, std::span<const double> x);
// Variant reusing precomputed times for x.
double relative_gap(const CostModel& model, const OdMatrix& od, std::span<const double> x,
                    std::span<const double> times);

struct DeltaMetrics {
  double delta_tstt = 0;  // signed fractions relative to the reference state
  double delta_vmt = 0;
};

// Throws input_error when the reference TSTT or VMT is zero.
DeltaMetrics delta_metrics(const CostModel& model, std::span<const double> x,
                           std::span<const double> x_ref);

// Proportion of links whose flow is outside epsilon-relative agreement with
// the reference; links with x_ref <= zero_tol compare |x| against zero_tol.
double pul(std::span<const double> x, std::span<const double> x_ref, double epsilon,
           double zero_tol);

// Default absolute tolerance for zero-flow reference links.
double default_zero_tol(double total_demand, int num_links);

struct MetricReport {
  double gap_level = 0;
  double delta_tstt = 0;  // absolute values, as reported in summary tables
  double delta_vmt = 0;
  double delta_tstt_signed = 0;
  double delta_vmt_signed = 0;
  double pul = 0;
  double epsilon = 0.01;
};

struct IterationRecord {
  int iteration = 0;
  double rg = 0;
  std::optional<double> objective;
  double wall_seconds = 0;
};

struct GapSnapshot {
  double level = 0;
  int iteration = 0;
  double rg = 0;
  double wall_seconds = 0;
  std::vector<double> x;  // flows at the first crossing of the level
};

struct ConvergenceLog {
  std::vector<IterationRecord> iterations;
  std::vector<GapSnapshot> snapshots;
  bool converged = false;
  double final_rg = 0;

  // First-crossing snapshot bookkeeping used by the solver loops.
  void record_crossings(std::span<const double> levels, int iteration, double rg,
                        double wall_seconds, std::span<const double> x);
};

// Materialize per-snapshot reports against a reference equilibrium.
std::vector<MetricReport> snapshot_reports(const ConvergenceLog& log, const CostModel& model,
                                           std::span<const double> x_ref, double epsilon,
                                           double zero_tol);

inline constexpr std::array<double, 6> kDefaultGapLevels = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};

}  // namespace stap
