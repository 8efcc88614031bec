#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <set>

#include "stap/solvers.hpp"

namespace stap {

namespace {

constexpr double kFlowEps = 1e-12;  // bush link counts as flow-carrying above this

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

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

  void apply_shift(std::span<const int> from, std::span<const int> to, double dx) {
    touched.clear();
    auto bump = [&](int b, double delta) {
      x[b] += delta;
      if (x[b] < 0) x[b] = 0;
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

// Per-node min/max route labels over a bush, computed in topological order.
struct BushLabels {
  std::vector<double> min_label, max_label;
  std::vector<int> min_pred, max_pred;  // incoming bush links, -1 when none
};

class BushSolver {
public:
  BushSolver(const CostModel& model, const OdMatrix& od, WorkingState& ws)
      : model_(model), net_(model.network()), od_(od), ws_(ws) {}

  void init_bush(Bush& bush, int origin) {
    bush.origin = origin;
    bush.in_bush.assign(net_.links.size(), 0);
    bush.link_flow.assign(net_.links.size(), 0.0);

    SpTree tree = shortest_paths(net_, ws_.t, origin);
    for (int v = 0; v < net_.num_nodes; ++v)
      if (tree.pred_link[v] >= 0) bush.in_bush[tree.pred_link[v]] = 1;
    for (const auto& [dest, demand] : od_.rows[origin]) {
      if (dest == origin) continue;
      if (tree.dist[dest] == kInf)
        throw input_error("unreachable OD pair with positive demand: " +
                          std::to_string(origin + 1) + " -> " + std::to_string(dest + 1));
      for (int v = dest; v != origin;) {
        int a = tree.pred_link[v];
        bush.link_flow[a] += demand;
        ws_.x[a] += demand;
        v = net_.links[a].tail;
      }
    }
    topo_sort(bush);
  }

  // One pass of bush maintenance: drop removable zero-flow links, then add
  // every link that strictly improves the min label at its head (skipping
  // any addition that would close a directed cycle).
  void improve_bush(Bush& bush) {
    BushLabels lab = labels(bush);
    std::vector<int> in_degree(net_.num_nodes, 0);
    for (size_t a = 0; a < net_.links.size(); ++a)
      if (bush.in_bush[a]) ++in_degree[net_.links[a].head];

    for (size_t a = 0; a < net_.links.size(); ++a) {
      if (!bush.in_bush[a] || bush.link_flow[a] > kFlowEps) continue;
      int head = net_.links[a].head;
      if (static_cast<int>(a) == lab.min_pred[head] || in_degree[head] <= 1) continue;
      bush.in_bush[a] = 0;
      bush.link_flow[a] = 0;
      --in_degree[head];
    }

    std::vector<int> pos(net_.num_nodes, -1);
    for (size_t i = 0; i < bush.topo_order.size(); ++i)
      pos[bush.topo_order[i]] = static_cast<int>(i);

    for (size_t a = 0; a < net_.links.size(); ++a) {
      if (bush.in_bush[a]) continue;
      const Link& link = net_.links[a];
      if (!net_.node_is_through(link.tail, bush.origin)) continue;
      if (lab.min_label[link.tail] == kInf || lab.min_label[link.head] == kInf) continue;
      if (!(lab.min_label[link.tail] + ws_.t[a] < lab.min_label[link.head] - 1e-12)) continue;
      // Label improvement alone does not rule out a directed cycle through
      // already-accepted links, so verify the head cannot reach the tail.
      if (pos[link.tail] >= 0 && pos[link.head] >= 0 && pos[link.tail] < pos[link.head]) {
        bush.in_bush[a] = 1;  // forward in the current order: always safe
      } else if (!bush_reaches(bush, link.head, link.tail)) {
        bush.in_bush[a] = 1;
      }
    }
    topo_sort(bush);  // removals and additions both require a fresh order
  }

  // Shift flow from the max-label segment onto the min-label segment at every
  // node where they diverge, sweeping nodes in reverse topological order.
  bool equilibrate(Bush& bush, double damping) {
    BushLabels lab = labels(bush);
    std::vector<int> pos(net_.num_nodes, -1);
    for (size_t i = 0; i < bush.topo_order.size(); ++i)
      pos[bush.topo_order[i]] = static_cast<int>(i);

    bool shifted = false;
    for (auto it = bush.topo_order.rbegin(); it != bush.topo_order.rend(); ++it) {
      int j = *it;
      if (j == bush.origin) continue;
      if (lab.max_pred[j] < 0 || lab.min_pred[j] < 0) continue;
      if (lab.max_pred[j] == lab.min_pred[j]) continue;
      if (lab.max_label[j] - lab.min_label[j] <= 1e-14) continue;

      auto [seg_min, seg_max] = trace_divergence(lab, pos, j);
      if (seg_max.empty()) continue;
      double cap = kInf;
      for (int a : seg_max) cap = std::min(cap, bush.link_flow[a]);
      if (cap <= 0) continue;

      double dx = newton_shift(model_, ws_.x, ws_.t, seg_min, seg_max, damping, cap);
      if (dx <= 0) continue;
      for (int a : seg_max) {
        bush.link_flow[a] -= dx;
        if (bush.link_flow[a] < 0) bush.link_flow[a] = 0;
      }
      for (int a : seg_min) bush.link_flow[a] += dx;
      ws_.apply_shift(seg_max, seg_min, dx);
      shifted = true;
      // The shift changes times, so labels are recomputed before the next
      // node; the topological order itself is unchanged within this pass.
      lab = labels(bush);
    }
    return shifted;
  }

private:
  // True when `from` can reach `to` through current bush links.
  bool bush_reaches(const Bush& bush, int from, int to) const {
    if (from == to) return true;
    std::vector<char> seen(net_.num_nodes, 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int a : net_.out_links()[u]) {
        if (!bush.in_bush[a]) continue;
        int v = net_.links[a].head;
        if (v == to) return true;
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return false;
  }

  // Kahn topological sort restricted to bush links, lowest node index first.
  void topo_sort(Bush& bush) const {
    // Only nodes reachable from the origin through the bush belong in the order.
    std::vector<char> reachable(net_.num_nodes, 0);
    {
      std::vector<int> stack{bush.origin};
      reachable[bush.origin] = 1;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int a : net_.out_links()[u]) {
          int v = net_.links[a].head;
          if (bush.in_bush[a] && !reachable[v]) {
            reachable[v] = 1;
            stack.push_back(v);
          }
        }
      }
    }

    // Count in-degrees over reachable tails only, so a stranded link cannot
    // block its head from ever entering the ready set.
    std::vector<int> in_degree(net_.num_nodes, 0);
    for (size_t a = 0; a < net_.links.size(); ++a)
      if (bush.in_bush[a] && reachable[net_.links[a].tail]) ++in_degree[net_.links[a].head];

    std::set<int> ready;
    int reachable_count = 0;
    for (int v = 0; v < net_.num_nodes; ++v) {
      if (!reachable[v]) continue;
      ++reachable_count;
      if (in_degree[v] == 0) ready.insert(v);
    }

    bush.topo_order.clear();
    while (!ready.empty()) {
      int u = *ready.begin();
      ready.erase(ready.begin());
      if (!reachable[u]) continue;
      bush.topo_order.push_back(u);
      for (int a : net_.out_links()[u]) {
        if (!bush.in_bush[a]) continue;
        int v = net_.links[a].head;
        if (--in_degree[v] == 0 && reachable[v]) ready.insert(v);
      }
    }
    // Kahn silently skips nodes on directed cycles, so an incomplete order
    // means the bush lost acyclicity.
    if (static_cast<int>(bush.topo_order.size()) != reachable_count ||
        bush.topo_order.empty() || bush.topo_order.front() != bush.origin)
      throw input_error("bush is not acyclic from origin " + std::to_string(bush.origin + 1));
  }

  BushLabels labels(const Bush& bush) const {
    BushLabels lab;
    lab.min_label.assign(net_.num_nodes, kInf);
    lab.max_label.assign(net_.num_nodes, -kInf);
    lab.min_pred.assign(net_.num_nodes, -1);
    lab.max_pred.assign(net_.num_nodes, -1);
    lab.min_label[bush.origin] = 0;
    lab.max_label[bush.origin] = 0;
    for (int u : bush.topo_order) {
      if (lab.min_label[u] == kInf) continue;
      for (int a : net_.out_links()[u]) {
        if (!bush.in_bush[a]) continue;
        int v = net_.links[a].head;
        double nd = lab.min_label[u] + ws_.t[a];
        if (nd < lab.min_label[v]) {
          lab.min_label[v] = nd;
          lab.min_pred[v] = a;
        }
        // Max labels follow flow-carrying links only, so the costliest used
        // route is equalized rather than an unused one.
        if (bush.link_flow[a] > kFlowEps && lab.max_label[u] != -kInf) {
          double xd = lab.max_label[u] + ws_.t[a];
          if (xd > lab.max_label[v]) {
            lab.max_label[v] = xd;
            lab.max_pred[v] = a;
          }
        }
      }
    }
    return lab;
  }

  // Walk min/max predecessor chains back from node j until they meet at the
  // divergence node, returning the two link segments (order is irrelevant to
  // the shift computation).
  std::pair<std::vector<int>, std::vector<int>> trace_divergence(const BushLabels& lab,
                                                                 const std::vector<int>& pos,
                                                                 int j) const {
    std::vector<int> seg_min, seg_max;
    int am = lab.min_pred[j];
    int ax = lab.max_pred[j];
    seg_min.push_back(am);
    seg_max.push_back(ax);
    int u = net_.links[am].tail;
    int v = net_.links[ax].tail;
    while (u != v) {
      if (pos[u] > pos[v]) {
        am = lab.min_pred[u];
        if (am < 0) return {{}, {}};
        seg_min.push_back(am);
        u = net_.links[am].tail;
      } else {
        ax = lab.max_pred[v];
        if (ax < 0) return {{}, {}};
        seg_max.push_back(ax);
        v = net_.links[ax].tail;
      }
    }
    return {std::move(seg_min), std::move(seg_max)};
  }

  const CostModel& model_;
  const Network& net_;
  const OdMatrix& od_;
  WorkingState& ws_;
};

}  // namespace

SolveResult algb_solve(const CostModel& model, const OdMatrix& od, const SolverConfig& config) {
  Stopwatch clock;
  SolveResult result;
  WorkingState ws(model);
  BushSolver solver(model, od, ws);

  std::vector<Bush> bushes;
  ws.refresh();  // free-flow times for the initial trees
  for (int origin = 0; origin < static_cast<int>(od.rows.size()); ++origin) {
    if (od.rows[origin].empty()) continue;
    Bush bush;
    solver.init_bush(bush, origin);
    bushes.push_back(std::move(bush));
  }
  ws.refresh();

  auto rebuild_flows = [&]() {
    std::fill(ws.x.begin(), ws.x.end(), 0.0);
    for (const Bush& bush : bushes)
      for (size_t a = 0; a < bush.link_flow.size(); ++a) ws.x[a] += bush.link_flow[a];
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

    for (Bush& bush : bushes) {
      solver.improve_bush(bush);
      for (int k = 0; k < config.inner_iterations_per_main; ++k)
        if (!solver.equilibrate(bush, config.newton_damping)) break;
    }
  }

  rebuild_flows();
  result.state.x = ws.x;
  result.state.t = ws.t;
  result.state.bushes = std::move(bushes);
  result.log.converged = result.converged;
  result.log.final_rg = result.log.iterations.empty() ? 0 : result.log.iterations.back().rg;
  return result;
}

}  // namespace stap
