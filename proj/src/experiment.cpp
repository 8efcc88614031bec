#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "stap/experiment.hpp"

namespace stap {

namespace {

std::string kind_name(CostModel::Kind kind, bool symmetric) {
  if (kind == CostModel::Kind::separable) return "separable";
  return symmetric ? "symmetric" : "asymmetric";
}

std::string trim_number(double v) {
  std::string s = format_g17(v);
  return s;
}

// Work item: everything needed to build and solve one instance.
struct Task {
  std::string instance_id;
  Algorithm algorithm = Algorithm::gp;
  std::string model_kind;  // separable / symmetric / asymmetric
  int n = -1;
  double lambda = -1;
  std::uint64_t seed = 0;
};

std::string lambda_tag(double lambda) {
  std::ostringstream out;
  out << "l" << lambda;
  std::string s = out.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

CostModel build_model(const Network& net, const Task& task, const ExperimentSpec& spec,
                      WarningList* warnings) {
  if (task.model_kind == "separable") return CostModel::bpr_separable(net);
  GenSpec gen;
  gen.degrees = task.n >= 0 ? task.n : 2;
  gen.diagonal_min = spec.diagonal_min;
  gen.seed = task.seed;
  gen.reverse_pairs_only = spec.design == ExperimentDesign::metric_stabilization;
  if (spec.design == ExperimentDesign::symmetry_sweep) {
    // Every sweep point interpolates the same asymmetric base matrix.
    gen.symmetric = false;
    return CostModel::bpr_interacting(
        net, interpolate_symmetry(generate_weights(net, gen, warnings), task.lambda));
  }
  gen.symmetric = task.model_kind == "symmetric";
  return CostModel::bpr_interacting(net, generate_weights(net, gen, warnings));
}

}  // namespace

ExperimentDesign design_from_name(const std::string& name) {
  if (name == "algorithms") return ExperimentDesign::algorithms;
  if (name == "degrees") return ExperimentDesign::degrees;
  if (name == "symmetry-sweep" || name == "symmetry_sweep")
    return ExperimentDesign::symmetry_sweep;
  if (name == "metric-stabilization" || name == "metric_stabilization")
    return ExperimentDesign::metric_stabilization;
  throw input_error("unknown experiment design: " + name +
                    " (expected algorithms, degrees, symmetry-sweep, or metric-stabilization)");
}

std::vector<InstanceResult> run_experiment(const ExperimentSpec& spec, WarningList* warnings) {
  Network net = load_network_file(spec.net_path, warnings);
  OdMatrix od = load_trips_file(spec.trips_path, warnings);
  // Workers share `net` read-only; its adjacency lists build lazily on first
  // use, so force them into existence before any threads exist.
  net.out_links();

  std::vector<Task> tasks;
  auto add_task = [&](const std::string& kind, Algorithm alg, int n, double lambda,
                      std::uint64_t seed) {
    Task t;
    t.algorithm = alg;
    t.model_kind = kind;
    t.n = n;
    t.lambda = lambda;
    t.seed = seed;
    std::ostringstream id;
    id << kind << "_" << algorithm_name(alg);
    if (n >= 0) id << "_n" << n;
    if (lambda >= 0) id << "_" << lambda_tag(lambda);
    id << "_s" << seed;
    t.instance_id = id.str();
    tasks.push_back(std::move(t));
  };

  switch (spec.design) {
    case ExperimentDesign::algorithms:
      for (std::uint64_t seed : spec.seeds)
        for (const char* kind : {"separable", "symmetric", "asymmetric"})
          for (Algorithm alg : spec.algorithms)
            add_task(kind, alg, std::string(kind) == "separable" ? -1 : 2, -1, seed);
      break;
    case ExperimentDesign::degrees:
      for (std::uint64_t seed : spec.seeds)
        for (const char* kind : {"symmetric", "asymmetric"})
          for (int n : spec.n_list)
            for (Algorithm alg : spec.algorithms) add_task(kind, alg, n, -1, seed);
      break;
    case ExperimentDesign::symmetry_sweep:
      for (std::uint64_t seed : spec.seeds)
        for (double lambda : spec.lambda_list)
          for (Algorithm alg : spec.algorithms)
            add_task(lambda == 0 ? "symmetric" : "asymmetric", alg, 2, lambda, seed);
      break;
    case ExperimentDesign::metric_stabilization:
      for (std::uint64_t seed : spec.seeds)
        for (const char* kind : {"separable", "symmetric", "asymmetric"})
          for (Algorithm alg : spec.algorithms) add_task(kind, alg, -1, -1, seed);
      break;
  }

  // Metric stabilization compares snapshots against a tightly converged
  // reference equilibrium, one per (model kind, seed).
  std::map<std::pair<std::string, std::uint64_t>, std::vector<double>> references;
  if (spec.design == ExperimentDesign::metric_stabilization) {
    for (const Task& task : tasks) {
      auto key = std::make_pair(task.model_kind, task.seed);
      if (references.count(key)) continue;
      CostModel model = build_model(net, task, spec, warnings);
      SolverConfig config;
      config.algorithm = Algorithm::gp;
      config.rg_target = spec.reference_rg;
      config.max_iterations = spec.reference_max_iterations;
      config.record_objective = false;
      references[key] = gp_solve(model, od, config).state.x;
    }
  }

  std::vector<InstanceResult> results(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      InstanceResult& r = results[i];
      r.instance_id = task.instance_id;
      r.algorithm = algorithm_name(task.algorithm);
      r.model_kind = task.model_kind;
      r.n = task.n;
      r.lambda = task.lambda;
      r.seed = task.seed;
      try {
        CostModel model = build_model(net, task, spec, nullptr);
        SolverConfig config;
        config.algorithm = task.algorithm;
        config.rg_target = spec.rg_target;
        config.max_iterations = spec.max_iterations;
        SolveResult solved = solve(model, od, config);
        r.converged = solved.converged;
        r.iterations = solved.iterations;
        r.final_rg = solved.log.final_rg;
        r.wall_seconds =
            solved.log.iterations.empty() ? 0 : solved.log.iterations.back().wall_seconds;
        r.flows = solved.state.x;
        if (spec.design == ExperimentDesign::metric_stabilization) {
          const auto& ref = references.at({task.model_kind, task.seed});
          r.reports = snapshot_reports(solved.log, model, ref, 0.01,
                                       default_zero_tol(od.total(), net.num_links()));
        }
        r.log = std::move(solved.log);
      } catch (const std::exception& e) {
        r.failed = true;
        r.failure = e.what();
      }
    }
  };

  int threads = std::max(1, spec.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    std::ostringstream index;
    index << "instance_id,algorithm,model_kind,n,lambda,seed,converged,failed,failure,"
             "iterations,final_rg,wall_seconds\n";
    std::ostringstream snapshots, snapshots_raw;
    snapshots << snapshot_csv_header(false);
    snapshots_raw << snapshot_csv_header(true);
    for (const InstanceResult& r : results) {
      index << r.instance_id << "," << r.algorithm << "," << r.model_kind << ","
            << (r.n >= 0 ? std::to_string(r.n) : "") << ","
            << (r.lambda >= 0 ? trim_number(r.lambda) : "") << "," << r.seed << ","
            << (r.converged ? 1 : 0) << "," << (r.failed ? 1 : 0) << "," << r.failure << ","
            << r.iterations << "," << trim_number(r.final_rg) << ","
            << trim_number(r.wall_seconds) << "\n";
      if (!r.failed) {
        write_file_atomic(spec.out_dir + "/" + r.instance_id + "_convergence.csv",
                          convergence_csv(r.log));
        snapshots << snapshot_csv_rows(r, false);
        snapshots_raw << snapshot_csv_rows(r, true);
      }
    }
    write_file_atomic(spec.out_dir + "/index.csv", index.str());
    write_file_atomic(spec.out_dir + "/snapshots.csv", snapshots.str());
    write_file_atomic(spec.out_dir + "/snapshots_raw.csv", snapshots_raw.str());
  }
  return results;
}

std::string convergence_csv(const ConvergenceLog& log) {
  std::ostringstream out;
  out << "iteration,rg,objective,wall_seconds\n";
  for (const IterationRecord& rec : log.iterations) {
    out << rec.iteration << "," << format_g17(rec.rg) << ",";
    if (rec.objective) out << format_g17(*rec.objective);
    out << "," << format_g17(rec.wall_seconds) << "\n";
  }
  return out.str();
}

std::string flows_csv(std::span<const double> x, std::span<const double> t) {
  std::ostringstream out;
  out << "link,flow,time\n";
  for (size_t a = 0; a < x.size(); ++a)
    out << (a + 1) << "," << format_g17(x[a]) << "," << format_g17(t[a]) << "\n";
  return out.str();
}

// Gap levels are nominal powers of ten; print them as such rather than with
// full float precision.
static std::string gap_level_text(double level) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0e", level);
  return buf;
}

std::string snapshot_csv_header(bool raw) {
  if (raw)
    return "instance_id,algorithm,model_kind,N,lambda,seed,gap_level,iteration,rg,"
           "delta_tstt_signed,delta_vmt_signed,epsilon,wall_seconds\n";
  return "instance_id,algorithm,model_kind,N,lambda,gap_level,iteration,"
         "delta_tstt,delta_vmt,pul,wall_seconds\n";
}

std::string snapshot_csv_rows(const InstanceResult& r, bool raw) {
  std::ostringstream out;
  for (size_t i = 0; i < r.log.snapshots.size(); ++i) {
    const GapSnapshot& snap = r.log.snapshots[i];
    out << r.instance_id << "," << r.algorithm << "," << r.model_kind << ","
        << (r.n >= 0 ? std::to_string(r.n) : "") << ","
        << (r.lambda >= 0 ? trim_number(r.lambda) : "") << ",";
    if (raw) out << r.seed << ",";
    out << gap_level_text(snap.level) << "," << snap.iteration << ",";
    if (raw) out << format_g17(snap.rg) << ",";
    const MetricReport* report = nullptr;
    for (const MetricReport& m : r.reports)
      if (m.gap_level == snap.level) {
        report = &m;
        break;
      }
    if (raw) {
      if (report)
        out << format_g17(report->delta_tstt_signed) << ","
            << format_g17(report->delta_vmt_signed) << "," << format_g17(report->epsilon);
      else
        out << ",,";
    } else {
      if (report)
        out << format_g17(report->delta_tstt) << "," << format_g17(report->delta_vmt) << ","
            << format_g17(report->pul);
      else
        out << ",,";
    }
    out << "," << format_g17(snap.wall_seconds) << "\n";
  }
  return out.str();
}

std::string summary_text(const SolveResult& result, const CostModel& model) {
  std::ostringstream out;
  const std::vector<double>& x = result.state.x;
  const std::vector<double>& t = result.state.t;
  std::vector<double> lengths;
  lengths.reserve(model.network().links.size());
  for (const Link& link : model.network().links) lengths.push_back(link.length);
  out << "converged: " << (result.converged ? "yes" : "no") << "\n";
  out << "iterations: " << result.iterations << "\n";
  out << "relative_gap: " << format_g17(result.log.final_rg) << "\n";
  out << "tstt: " << format_g17(tstt(x, t)) << "\n";
  out << "vmt: " << format_g17(vmt(x, lengths)) << "\n";
  bool heuristic = false;
  if (model.kind() == CostModel::Kind::separable) {
    out << "objective: " << format_g17(model.beckmann_objective(x)) << "\n";
  } else {
    double value = model.line_integral_objective(x, &heuristic);
    out << (heuristic ? "objective_heuristic: " : "objective: ") << format_g17(value) << "\n";
  }
  out << "model: " << kind_name(model.kind(), model.symmetric()) << "\n";
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  write_text_file(tmp, content);
  std::filesystem::rename(tmp, path);
}

int default_thread_count() {
  const char* env = std::getenv("STAP_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

}  // namespace stap
