#pragma once

#include <limits>
#include <span>
#include <vector>

#include "stap/network.hpp"

namespace stap {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SpTree {
  std::vector<double> dist;      // per node; kInf when unreachable
  std::vector<int> pred_link;    // per node; -1 at origin / unreachable
};

// Label-correcting shortest paths with a deque (SLF ordering). Nodes below
// first_thru_node are never expanded except as the origin. Exact-tie labels
// keep the lowest predecessor link index, giving deterministic trees.
SpTree shortest_paths(const Network& net, std::span<const double> times, int origin);

// Links from origin to dest following pred_link, in travel order.
// Empty when dest == origin; throws input_error when unreachable.
std::vector<int> trace_path(const Network& net, const SpTree& tree, int origin, int dest);

struct AonResult {
  std::vector<double> flows;
  double sptt = 0;  // sum over OD of demand * shortest label
};

// All demand on current shortest paths. Throws input_error naming the first
// OD pair with positive demand and no path.
AonResult all_or_nothing(const Network& net, const OdMatrix& od, std::span<const double> times);

}  // namespace stap
