#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stap {

// Thrown on unrecoverable input problems (bad files, unreachable demand, ...).
struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct Link {
  int tail = 0;  // 0-based internal node index
  int head = 0;
  double capacity = 0;
  double length = 0;
  double free_flow_time = 0;
  double bpr_b = 0;
  double bpr_power = 0;
  double speed_limit = 0;
  double toll = 0;
  double link_type = 0;
  bool centroid_connector = false;
};

class Network {
public:
  int num_nodes = 0;
  int num_zones = 0;
  int first_thru_node = 0;  // 0-based: nodes < first_thru_node cannot be intermediates
  std::vector<Link> links;

  int num_links() const { return static_cast<int>(links.size()); }

  // Out-going link ids per node, in file order (determinism relies on this).
  const std::vector<std::vector<int>>& out_links() const;
  const std::vector<std::vector<int>>& in_links() const;

  bool node_is_through(int node, int origin) const {
    return node == origin || node >= first_thru_node;
  }

private:
  // Built lazily on first access and NOT thread-safe while unbuilt: call
  // out_links() once before sharing a Network across threads.
  mutable std::vector<std::vector<int>> out_links_;
  mutable std::vector<std::vector<int>> in_links_;
  mutable bool adjacency_built_ = false;
  void build_adjacency() const;
};

// Per-origin demand rows; zone indices are 0-based internal.
class OdMatrix {
public:
  int num_zones = 0;
  // rows[origin] = sorted (destination, demand > 0) pairs
  std::vector<std::vector<std::pair<int, double>>> rows;

  double total() const;
  double demand(int origin, int dest) const;
  void add(int origin, int dest, double trips);
  void sort_rows();
};

// Warnings accumulated during parsing; fatal problems throw input_error instead.
using WarningList = std::vector<std::string>;

Network parse_network(const std::string& text, WarningList* warnings = nullptr);
OdMatrix parse_trips(const std::string& text, WarningList* warnings = nullptr);

std::string write_network_tntp(const Network& net);
std::string write_trips_tntp(const OdMatrix& od);

Network load_network_file(const std::string& path, WarningList* warnings = nullptr);
OdMatrix load_trips_file(const std::string& path, WarningList* warnings = nullptr);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// 17-significant-digit decimal form; round-trips any double exactly.
std::string format_g17(double v);

}  // namespace stap
