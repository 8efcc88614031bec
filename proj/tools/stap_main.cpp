#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stap/experiment.hpp"
#include "stap/fixtures.hpp"
#include "stap/interactions.hpp"
#include "stap/metrics.hpp"
#include "stap/network.hpp"
#include "stap/solvers.hpp"
#include "stap/weights.hpp"

namespace {

using namespace stap;

void print_warnings(const WarningList& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Loads either a network/trips file pair or one of the built-in instances.
fixtures::Instance load_instance(const std::string& net_path, const std::string& trips_path,
                                 const std::string& weights_path, const std::string& fixture,
                                 bool exact_variant, WarningList& warnings) {
  if (!fixture.empty()) {
    if (fixture == "nonmonotone") return fixtures::nonmonotone_demo();
    return fixtures::toy(fixtures::toy_scenario_from_name(fixture),
                         exact_variant ? fixtures::ToyVariant::exact
                                       : fixtures::ToyVariant::printed);
  }
  fixtures::Instance inst;
  inst.net = load_network_file(net_path, &warnings);
  inst.od = load_trips_file(trips_path, &warnings);
  if (!weights_path.empty()) {
    inst.model = CostModel::bpr_interacting(
        inst.net, load_weights_file(weights_path, inst.net.num_links()));
  } else {
    inst.model = CostModel::bpr_separable(inst.net);
  }
  return inst;
}

int cmd_solve(const std::string& net_path, const std::string& trips_path,
              const std::string& weights_path, const std::string& fixture, bool exact_variant,
              const std::string& algorithm, double rg, long max_iters, double damping, int inner,
              const std::string& out_dir) {
  WarningList warnings;
  fixtures::Instance inst =
      load_instance(net_path, trips_path, weights_path, fixture, exact_variant, warnings);
  print_warnings(warnings);

  SolverConfig config;
  config.algorithm = algorithm_from_name(algorithm);
  config.rg_target = rg;
  config.max_iterations = max_iters;
  config.newton_damping = damping;
  config.inner_iterations_per_main = inner;
  SolveResult result = solve(inst.model, inst.od, config);

  std::cout << summary_text(result, inst.model);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file_atomic(out_dir + "/flows.csv", flows_csv(result.state.x, result.state.t));
    write_file_atomic(out_dir + "/convergence.csv", convergence_csv(result.log));
    write_file_atomic(out_dir + "/summary.txt", summary_text(result, inst.model));
  }
  return result.converged ? 0 : 1;
}

int cmd_genweights(const std::string& net_path, int degrees, bool asymmetric, bool reverse_pairs,
                   std::uint64_t seed, double diag_min, const std::string& out_path) {
  WarningList warnings;
  Network net = load_network_file(net_path, &warnings);
  GenSpec spec;
  spec.degrees = degrees;
  spec.symmetric = !asymmetric;
  spec.seed = seed;
  spec.diagonal_min = diag_min;
  spec.reverse_pairs_only = reverse_pairs;
  SparseMatrix w = generate_weights(net, spec, &warnings);
  print_warnings(warnings);
  if (out_path.empty() || out_path == "-")
    std::cout << write_weights(w);
  else
    write_file_atomic(out_path, write_weights(w));
  return 0;
}

int cmd_condnum(const std::string& net_path, const std::string& weights_path,
                const std::string& fixture, bool exact_variant) {
  CondNumber cn;
  if (!fixture.empty()) {
    fixtures::Instance inst = fixtures::toy(
        fixtures::toy_scenario_from_name(fixture),
        exact_variant ? fixtures::ToyVariant::exact : fixtures::ToyVariant::printed);
    cn = condition_number(inst.model.interactions());
  } else {
    WarningList warnings;
    Network net = load_network_file(net_path, &warnings);
    print_warnings(warnings);
    cn = condition_number(load_weights_file(weights_path, net.num_links()));
  }
  std::cout << "condition_number: " << format_g17(cn.value) << "\n";
  std::cout << "convention: " << (cn.spectral ? "singular-values" : "eigenvalues") << "\n";
  std::cout << "method: " << (cn.approximate ? "iterative" : "dense") << "\n";
  return 0;
}

int cmd_experiment(ExperimentSpec spec, const std::vector<std::string>& algorithm_names) {
  if (!algorithm_names.empty()) {
    spec.algorithms.clear();
    for (const std::string& name : algorithm_names)
      spec.algorithms.push_back(algorithm_from_name(name));
  } else if (spec.design == ExperimentDesign::metric_stabilization) {
    spec.algorithms = {Algorithm::gp, Algorithm::algb};
  }
  WarningList warnings;
  std::vector<InstanceResult> results = run_experiment(spec, &warnings);
  print_warnings(warnings);
  int failures = 0, unconverged = 0;
  for (const InstanceResult& r : results) {
    std::cout << r.instance_id << ": "
              << (r.failed ? "failed (" + r.failure + ")"
                           : (r.converged ? "converged" : "gap target not reached"))
              << " iterations=" << r.iterations << " rg=" << format_g17(r.final_rg) << "\n";
    if (r.failed) ++failures;
    if (!r.failed && !r.converged) ++unconverged;
  }
  if (failures > 0) return 2;
  return unconverged == 0 ? 0 : 1;
}

int cmd_merge_demo(double t0_1, double t0_2, double u3, double coef, int grid, double max_load) {
  MergeNode m{t0_1, t0_2, u3, coef};
  std::cout << "x1,x2,t1,t2,j11,j12,j21,j22,symmetric,psd\n";
  bool all_symmetric = true, all_psd = true;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      double x1 = max_load * i / grid;
      double x2 = max_load * j / grid;
      auto t = jin_zhang_times(m, x1, x2);
      auto jac = jin_zhang_jacobian(m, x1, x2);
      bool symmetric = jac[1] == jac[2];
      // 2x2 PSD test on the symmetrized Jacobian: nonnegative diagonal and
      // determinant.
      double s01 = 0.5 * (jac[1] + jac[2]);
      bool psd = jac[0] >= 0 && jac[3] >= 0 && (jac[0] * jac[3] - s01 * s01) >= -1e-12;
      all_symmetric = all_symmetric && symmetric;
      all_psd = all_psd && psd;
      std::cout << format_g17(x1) << "," << format_g17(x2) << "," << format_g17(t[0]) << ","
                << format_g17(t[1]) << "," << format_g17(jac[0]) << "," << format_g17(jac[1])
                << "," << format_g17(jac[2]) << "," << format_g17(jac[3]) << ","
                << (symmetric ? 1 : 0) << "," << (psd ? 1 : 0) << "\n";
    }
  }
  std::cerr << "jacobian symmetric everywhere: " << (all_symmetric ? "yes" : "no") << "\n";
  std::cerr << "jacobian positive semidefinite everywhere: " << (all_psd ? "yes" : "no") << "\n";
  return all_symmetric && all_psd ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"static traffic assignment with link cost interactions"};
  app.require_subcommand(1);

  // solve
  std::string net_path, trips_path, weights_path, fixture, algorithm = "gp", out_dir;
  bool exact_variant = false;
  double rg = 1e-6, damping = 1.0;
  long max_iters = 1000;
  int inner = 20;
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one assignment instance");
  solve_cmd->add_option("--net", net_path, "network file (tntp)");
  solve_cmd->add_option("--trips", trips_path, "trip table file (tntp)");
  solve_cmd->add_option("--weights", weights_path, "interaction weight file (tapw)");
  solve_cmd->add_option("--fixture", fixture,
                        "built-in instance (separable, symmetric-full, symmetric-partial, "
                        "asymmetric-full, asymmetric-partial, nonmonotone)");
  solve_cmd->add_flag("--exact-coefficients", exact_variant,
                      "use the exact fraction coefficients for built-in instances");
  solve_cmd->add_option("--algorithm", algorithm, "msa, fw, gp, or algb")->capture_default_str();
  solve_cmd->add_option("--rg", rg, "relative gap target")->capture_default_str();
  solve_cmd->add_option("--max-iters", max_iters, "iteration cap")->capture_default_str();
  solve_cmd->add_option("--damping", damping, "newton shift damping in (0,1]")
      ->capture_default_str();
  solve_cmd->add_option("--inner", inner, "inner equilibration passes per main iteration")
      ->capture_default_str();
  solve_cmd->add_option("--out", out_dir, "directory for flows/convergence/summary files");

  // genweights
  std::string gw_net, gw_out;
  int gw_degrees = 2;
  bool gw_asymmetric = false, gw_reverse = false;
  std::uint64_t gw_seed = 1;
  double gw_diag_min = 0.55;
  CLI::App* gen_cmd = app.add_subcommand("genweights", "generate an interaction weight matrix");
  gen_cmd->add_option("--net", gw_net, "network file (tntp)")->required();
  gen_cmd->add_option("--degrees,--N", gw_degrees,
                      "neighborhood radius in the link adjacency graph")
      ->capture_default_str();
  bool gw_symmetric = false;
  CLI::Option* gw_sym_flag =
      gen_cmd->add_flag("--symmetric", gw_symmetric, "draw a symmetric matrix (default)");
  gen_cmd->add_flag("--asymmetric", gw_asymmetric, "draw an asymmetric matrix")
      ->excludes(gw_sym_flag);
  gen_cmd->add_flag("--reverse-pairs", gw_reverse,
                    "restrict interactions to reverse-direction twin links");
  gen_cmd->add_option("--seed", gw_seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--diag-min", gw_diag_min, "minimum diagonal weight, in (0.5, 1]")
      ->capture_default_str();
  gen_cmd->add_option("--out", gw_out, "output file (default: stdout)");

  // condnum
  std::string cn_net, cn_weights, cn_fixture;
  bool cn_exact = false;
  CLI::App* cn_cmd = app.add_subcommand("condnum", "condition number of a weight matrix");
  cn_cmd->add_option("--net", cn_net, "network file (for the link count)");
  cn_cmd->add_option("--weights", cn_weights, "interaction weight file (tapw)");
  cn_cmd->add_option("--fixture", cn_fixture, "built-in instance name");
  cn_cmd->add_flag("--exact-coefficients", cn_exact,
                   "use the exact fraction coefficients for built-in instances");

  // experiment
  ExperimentSpec spec;
  std::string design_name = "algorithms";
  std::vector<std::string> algo_names;
  CLI::App* exp_cmd = app.add_subcommand("experiment", "run a study design over one network");
  exp_cmd->add_option("--design", design_name,
                      "algorithms, degrees, symmetry-sweep, or metric-stabilization")
      ->capture_default_str();
  exp_cmd->add_option("--net", spec.net_path, "network file (tntp)")->required();
  exp_cmd->add_option("--trips", spec.trips_path, "trip table file (tntp)")->required();
  exp_cmd->add_option("--out", spec.out_dir, "output directory")->required();
  exp_cmd->add_option("--seeds", spec.seeds, "weight-generation seeds")
      ->delimiter(',')
      ->capture_default_str();
  exp_cmd->add_option("--n-list", spec.n_list, "neighborhood radii for the degrees design")
      ->delimiter(',');
  exp_cmd->add_option("--lambda-list", spec.lambda_list,
                      "asymmetry interpolation points for the symmetry sweep")
      ->delimiter(',');
  exp_cmd->add_option("--algorithms", algo_names, "algorithms to run")->delimiter(',');
  exp_cmd->add_option("--rg", spec.rg_target, "relative gap target")->capture_default_str();
  exp_cmd->add_option("--max-iters", spec.max_iterations, "iteration cap")->capture_default_str();
  exp_cmd->add_option("--diag-min", spec.diagonal_min, "minimum diagonal weight")
      ->capture_default_str();
  exp_cmd->add_option("--reference-rg", spec.reference_rg,
                      "gap target for the reference equilibrium (metric stabilization)")
      ->capture_default_str();
  spec.threads = default_thread_count();
  exp_cmd->add_option("--threads", spec.threads, "worker threads")->capture_default_str();

  // merge-demo
  double md_t0_1 = 1.0, md_t0_2 = 1.0, md_u3 = 10.0, md_coef = 1.0, md_max_load = 20.0;
  int md_grid = 20;
  CLI::App* md_cmd = app.add_subcommand(
      "merge-demo", "evaluate the two-inflow merge cost model over a grid");
  md_cmd->add_option("--t0-1", md_t0_1, "free-flow time of inflow 1")->capture_default_str();
  md_cmd->add_option("--t0-2", md_t0_2, "free-flow time of inflow 2")->capture_default_str();
  md_cmd->add_option("--u3", md_u3, "downstream capacity")->capture_default_str();
  md_cmd->add_option("--coef", md_coef, "delay coefficient")->capture_default_str();
  md_cmd->add_option("--grid", md_grid, "grid points per axis")->capture_default_str();
  md_cmd->add_option("--max-load", md_max_load, "largest inflow on each axis")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) {
      if (fixture.empty() && (net_path.empty() || trips_path.empty()))
        throw input_error("solve needs either --fixture or both --net and --trips");
      return cmd_solve(net_path, trips_path, weights_path, fixture, exact_variant, algorithm, rg,
                       max_iters, damping, inner, out_dir);
    }
    if (gen_cmd->parsed())
      return cmd_genweights(gw_net, gw_degrees, gw_asymmetric, gw_reverse, gw_seed, gw_diag_min,
                            gw_out);
    if (cn_cmd->parsed()) {
      if (cn_fixture.empty() && (cn_net.empty() || cn_weights.empty()))
        throw input_error("condnum needs either --fixture or both --net and --weights");
      return cmd_condnum(cn_net, cn_weights, cn_fixture, cn_exact);
    }
    if (exp_cmd->parsed()) {
      spec.design = design_from_name(design_name);
      return cmd_experiment(spec, algo_names);
    }
    if (md_cmd->parsed())
      return cmd_merge_demo(md_t0_1, md_t0_2, md_u3, md_coef, md_grid, md_max_load);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
