#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stap/cost_model.hpp"
#include "stap/interactions.hpp"
#include "stap/metrics.hpp"
#include "stap/network.hpp"
#include "stap/solvers.hpp"

namespace stap {

enum class ExperimentDesign { algorithms, degrees, symmetry_sweep, metric_stabilization };

ExperimentDesign design_from_name(const std::string& name);

struct ExperimentSpec {
  ExperimentDesign design = ExperimentDesign::algorithms;
  std::string net_path;
  std::string trips_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds{1};
  std::vector<int> n_list{0, 2, 4, 6};
  std::vector<double> lambda_list{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<Algorithm> algorithms{Algorithm::msa, Algorithm::fw, Algorithm::gp};
  double rg_target = 1e-4;
  long max_iterations = 200000;
  double diagonal_min = 0.55;
  int threads = 1;
  double reference_rg = 1e-10;
  long reference_max_iterations = 200000;
};

// One solver run inside an experiment. model_kind names the cost structure
// (separable / symmetric / asymmetric); n and lambda are -1 when not
// applicable to the design.
struct InstanceResult {
  std::string instance_id;
  std::string algorithm;
  std::string model_kind;
  int n = -1;
  double lambda = -1;
  std::uint64_t seed = 0;
  bool converged = false;
  bool failed = false;
  std::string failure;
  int iterations = 0;
  double final_rg = 0;
  double wall_seconds = 0;
  ConvergenceLog log;
  std::vector<double> flows;
  std::vector<MetricReport> reports;  // metric-stabilization design only
};

// Runs the design single- or multi-threaded (spec.threads), writes one
// convergence CSV per instance plus combined index/snapshot CSVs into
// spec.out_dir, and returns results in deterministic instance order.
std::vector<InstanceResult> run_experiment(const ExperimentSpec& spec,
                                           WarningList* warnings = nullptr);

// CSV helpers shared by the CLI (wall-time columns are always last so that
// byte-identity checks can strip them).
std::string convergence_csv(const ConvergenceLog& log);
std::string flows_csv(std::span<const double> x, std::span<const double> t);
// Snapshot CSVs: the default schema carries absolute deltas and PUL; the raw
// variant adds the seed, the measured gap, signed deltas, and epsilon.
std::string snapshot_csv_header(bool raw = false);
std::string snapshot_csv_rows(const InstanceResult& r, bool raw = false);
std::string summary_text(const SolveResult& result, const CostModel& model);

void write_file_atomic(const std::string& path, const std::string& content);

int default_thread_count();  // STAP_THREADS environment variable, else 1

}  // namespace stap
