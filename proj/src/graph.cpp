#include "stap/graph.hpp"

#include <algorithm>
#include <deque>

namespace stap {

SpTree shortest_paths(const Network& net, std::span<const double> times, int origin) {
  SpTree tree;
  tree.dist.assign(net.num_nodes, kInf);
  tree.pred_link.assign(net.num_nodes, -1);
  tree.dist[origin] = 0;

  const auto& out = net.out_links();
  std::deque<int> queue{origin};
  std::vector<char> queued(net.num_nodes, 0);
  queued[origin] = 1;

  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    queued[u] = 0;
    if (!net.node_is_through(u, origin)) continue;  // centroids terminate paths
    double du = tree.dist[u];
    for (int a : out[u]) {
      int v = net.links[a].head;
      double nd = du + times[a];
      if (nd < tree.dist[v]) {
        tree.dist[v] = nd;
        tree.pred_link[v] = a;
        if (!queued[v]) {
          // SLF: promising nodes jump the queue
          if (!queue.empty() && nd < tree.dist[queue.front()])
            queue.push_front(v);
          else
            queue.push_back(v);
          queued[v] = 1;
        }
      } else if (nd == tree.dist[v] && a < tree.pred_link[v]) {
        tree.pred_link[v] = a;  // deterministic tie-break: lowest link index
      }
    }
  }
  return tree;
}

std::vector<int> trace_path(const Network& net, const SpTree& tree, int origin, int dest) {
  std::vector<int> links;
  int node = dest;
  while (node != origin) {
    int a = tree.pred_link[node];
    if (a < 0)
      throw input_error("no path from node " + std::to_string(origin + 1) + " to node " +
                        std::to_string(dest + 1));
    links.push_back(a);
    node = net.links[a].tail;
  }
  std::reverse(links.begin(), links.end());
  return links;
}

AonResult all_or_nothing(const Network& net, const OdMatrix& od, std::span<const double> times) {
  AonResult result;
  result.flows.assign(net.num_links(), 0.0);
  for (int origin = 0; origin < static_cast<int>(od.rows.size()); ++origin) {
    const auto& row = od.rows[origin];
    if (row.empty()) continue;
    SpTree tree = shortest_paths(net, times, origin);
    for (const auto& [dest, demand] : row) {
      if (dest == origin) continue;
      if (tree.dist[dest] == kInf)
        throw input_error("unreachable OD pair with positive demand: " +
                          std::to_string(origin + 1) + " -> " + std::to_string(dest + 1));
      result.sptt += demand * tree.dist[dest];
      for (int node = dest; node != origin;) {
        int a = tree.pred_link[node];
        result.flows[a] += demand;
        node = net.links[a].tail;
      }
    }
  }
  return result;
}

}  // namespace stap
