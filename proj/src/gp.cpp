#include <algorithm>
#include <chrono>
#include <cmath>

#include "stap/solvers.hpp"

namespace stap {

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// Shared incremental state: link flows, effective flows, cached times.
struct WorkingState {
  const CostModel* model;
  std::vector<double> x, f, t;
  std::vector<int> touched;
  std::vector<char> touched_mark;

  explicit WorkingState(const CostModel& m)
      : model(&m),
        x(m.num_links(), 0.0),
        f(m.num_links(), 0.0),
        t(m.num_links(), 0.0),
        touched_mark(m.num_links(), 0) {}

  void refresh() {
    model->effective_flows(x, f);
    for (int a = 0; a < model->num_links(); ++a) t[a] = model->time_from_effective(a, f[a]);
  }

  // Move dx from every link of `from` to every link of `to`; shared links are
  // passed in both lists and cancel exactly.
  void apply_shift(std::span<const int> from, std::span<const int> to, double dx) {
    touched.clear();
    auto bump = [&](int b, double delta) {
      x[b] += delta;
      if (x[b] < 0) x[b] = 0;  // guard FP residue at truncation bounds
      for (const auto& e : model->interactions().columns()[b]) {
        f[e.col] += e.value * delta;
        if (!touched_mark[e.col]) {
          touched_mark[e.col] = 1;
          touched.push_back(e.col);
        }
      }
    };
    for (int a : from) bump(a, -dx);
    for (int a : to) bump(a, dx);
    for (int a : touched) {
      t[a] = model->time_from_effective(a, f[a]);
      touched_mark[a] = 0;
    }
  }
};

}  // namespace

SolveResult gp_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config) {
  Stopwatch clock;
  SolveResult result;
  const Network& net = model.network();
  WorkingState ws(model);

  // AON at free-flow times, stored as one path per OD pair.
  std::map<std::pair<int, int>, std::vector<PathFlow>> paths;
  {
    ws.refresh();  // x = 0 -> free-flow times
    for (int origin = 0; origin < static_cast<int>(od.rows.size()); ++origin) {
      if (od.rows[origin].empty()) continue;
      SpTree tree = shortest_paths(net, ws.t, origin);
      for (const auto& [dest, demand] : od.rows[origin]) {
        if (dest == origin) continue;
        if (tree.dist[dest] == kInf)
          throw input_error("unreachable OD pair with positive demand: " +
                            std::to_string(origin + 1) + " -> " + std::to_string(dest + 1));
        auto links = trace_path(net, tree, origin, dest);
        for (int a : links) ws.x[a] += demand;
        paths[{origin, dest}].push_back({std::move(links), demand});
      }
    }
    ws.refresh();
  }

  auto rebuild_flows = [&]() {
    std::fill(ws.x.begin(), ws.x.end(), 0.0);
    for (const auto& [key, set] : paths) {
      (void)key;
      for (const auto& p : set)
        for (int a : p.links) ws.x[a] += p.flow;
    }
    ws.refresh();
  };

  for (long it = 1; it <= config.max_iterations; ++it) {
    rebuild_flows();
    GapInfo gap = gap_info(model, od, ws.x, ws.t);
    double wall = clock.seconds();
    result.log.iterations.push_back(
        {static_cast<int>(it), gap.rg,
         config.record_objective ? model.objective(ws.x) : std::nullopt, wall});
    result.log.record_crossings(config.snapshot_levels, static_cast<int>(it), gap.rg, wall, ws.x);
    result.iterations = static_cast<int>(it);
    if (gap.rg <= config.rg_target) {
      result.converged = true;
      break;
    }
    if (it == config.max_iterations) break;

    for (auto& [key, set] : paths) {
      auto [origin, dest] = key;
      SpTree tree = shortest_paths(net, ws.t, origin);
      auto sp_links = trace_path(net, tree, origin, dest);

      int shortest = -1;
      for (size_t j = 0; j < set.size(); ++j)
        if (set[j].links == sp_links) {
          shortest = static_cast<int>(j);
          break;
        }
      if (shortest < 0) {
        set.push_back({std::move(sp_links), 0.0});
        shortest = static_cast<int>(set.size()) - 1;
      }

      for (size_t j = 0; j < set.size(); ++j) {
        if (static_cast<int>(j) == shortest || set[j].flow <= 0) continue;
        double dx = newton_shift(model, ws.x, ws.t, set[shortest].links, set[j].links,
                                 config.newton_damping, set[j].flow);
        if (dx <= 0) continue;  // GP only moves flow toward the shortest path
        set[j].flow -= dx;
        set[shortest].flow += dx;
        ws.apply_shift(set[j].links, set[shortest].links, dx);
      }

      // Drop negligible paths, folding their residue into the shortest path.
      for (size_t j = 0; j < set.size(); ++j) {
        if (static_cast<int>(j) == shortest) continue;
        if (set[j].flow < config.path_flow_drop_tol && set[j].flow > 0) {
          ws.apply_shift(set[j].links, set[shortest].links, set[j].flow);
          set[shortest].flow += set[j].flow;
          set[j].flow = 0;
        }
      }
      std::vector<PathFlow> kept;
      kept.reserve(set.size());
      for (size_t j = 0; j < set.size(); ++j)
        if (static_cast<int>(j) == shortest || set[j].flow > 0) kept.push_back(std::move(set[j]));
      set = std::move(kept);
    }
  }

  rebuild_flows();
  result.state.x = ws.x;
  result.state.t = ws.t;
  result.state.paths = std::move(paths);
  result.log.converged = result.converged;
  result.log.final_rg = result.log.iterations.empty() ? 0 : result.log.iterations.back().rg;
  return result;
}

}  // namespace stap
