#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "stap/cost_model.hpp"
#include "stap/graph.hpp"
#include "stap/metrics.hpp"
#include "stap/network.hpp"

namespace stap {

enum class Algorithm { msa, fw, gp, algb };

Algorithm algorithm_from_name(const std::string& name);  // throws input_error on unknown tag
std::string algorithm_name(Algorithm a);

struct SolverConfig {
  Algorithm algorithm = Algorithm::gp;
  double rg_target = 1e-6;
  long max_iterations = 1000;
  double newton_damping = 1.0;       // in (0,1]
  double path_flow_drop_tol = 1e-12;
  int inner_iterations_per_main = 20;
  std::vector<double> snapshot_levels{kDefaultGapLevels.begin(), kDefaultGapLevels.end()};
  bool record_objective = true;
};

struct PathFlow {
  std::vector<int> links;
  double flow = 0;
};

struct Bush {
  int origin = 0;
  std::vector<char> in_bush;      // per link
  std::vector<double> link_flow;  // this origin's flow per link
  std::vector<int> topo_order;    // reachable nodes, topologically sorted
};

struct FlowState {
  std::vector<double> x;  // link flows
  std::vector<double> t;  // cached times, equals model times at x
  // populated by gp_solve:
  std::map<std::pair<int, int>, std::vector<PathFlow>> paths;
  // populated by algb_solve:
  std::vector<Bush> bushes;
};

struct SolveResult {
  FlowState state;
  ConvergenceLog log;
  bool converged = false;
  int iterations = 0;
};

SolveResult msa_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config);
SolveResult fw_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config);
SolveResult gp_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config);
SolveResult algb_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config);
SolveResult solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config);

// Newton estimate of the flow shift that equalizes the costs of two paths
// joining the same OD pair, shifted from path_u (costlier) onto path_l.
// The denominator sums Jacobian entries over the symmetric-difference link
// sets with sign structure (LL + UU - LU - UL); when it is nonpositive
// (possible only for non-monotone or asymmetric models) the separable
// fallback sum of own-flow derivatives is used, and if that is also zero the
// shift is zero. The result is truncated so no link flow goes negative and
// never exceeds cap (the available path flow when called by a solver).
double newton_shift(const CostModel& model, std::span<const double> x, std::span<const double> t,
                    std::span<const int> path_l, std::span<const int> path_u, double damping = 1.0,
                    double cap = kInf);

// Denominator routes, exposed for the symmetric-equivalence identity tests:
// general sign-structured form and the symmetric short form (LL + UU - 2 LU).
double newton_denominator_general(const CostModel& model, std::span<const double> x,
                                  std::span<const int> path_l, std::span<const int> path_u);
double newton_denominator_symmetric(const CostModel& model, std::span<const double> x,
                                    std::span<const int> path_l, std::span<const int> path_u);

// Relative gap plus the supporting AON solution at times t (shared by the
// solver loops and metrics).
struct GapInfo {
  double rg = 0;
  double tstt = 0;
  double sptt = 0;
  std::vector<double> aon_flows;
};
GapInfo gap_info(const CostModel& model, const OdMatrix& od, std::span<const double> x,
                 std::span<const double> t);

}  // namespace stap
