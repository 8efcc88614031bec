#include <algorithm>

#include "stap/fixtures.hpp"

namespace stap {
namespace fixtures {

namespace {

Network parallel_network(const std::vector<double>& free_flow_times) {
  Network net;
  net.num_nodes = 2;
  net.num_zones = 2;
  net.first_thru_node = 0;
  for (double fft : free_flow_times) {
    Link link;
    link.tail = 0;
    link.head = 1;
    link.capacity = fft;  // chosen so BPR with b=1, p=1 reduces to fft + flow
    link.length = fft;
    link.free_flow_time = fft;
    link.bpr_b = 1.0;
    link.bpr_power = 1.0;
    net.links.push_back(link);
  }
  return net;
}

OdMatrix single_pair_demand(double demand) {
  OdMatrix od;
  od.num_zones = 2;
  od.rows.resize(2);
  od.add(0, 1, demand);
  return od;
}

std::vector<std::vector<double>> toy_coeffs(ToyScenario scenario, ToyVariant variant) {
  const bool exact = variant == ToyVariant::exact;
  const double w10 = exact ? 10.0 / 60.0 : 0.167;  // tabulated as 0.167
  const double w11 = exact ? 11.0 / 60.0 : 0.183;  // tabulated as 0.183
  const double w9 = exact ? 9.0 / 60.0 : 0.15;     // 0.15 is already exact
  switch (scenario) {
    case ToyScenario::separable:
      return {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
    case ToyScenario::symmetric_full:
      return {{0.5, w10, w10, w10},
              {w10, 0.5, w10, w10},
              {w10, w10, 0.5, w10},
              {w10, w10, w10, 0.5}};
    case ToyScenario::symmetric_partial:
      return {{0.75, 0.25, 0, 0}, {0.25, 0.75, 0, 0}, {0, 0, 0.75, 0.25}, {0, 0, 0.25, 0.75}};
    case ToyScenario::asymmetric_full:
      return {{0.5, w9, w10, w11},
              {w10, 0.5, w11, w9},
              {w11, w10, 0.5, w9},
              {w9, w11, w10, 0.5}};
    case ToyScenario::asymmetric_partial:
      return {{0.75, 0.25, 0, 0}, {0.3, 0.75, 0, 0}, {0, 0, 0.75, 0.3}, {0, 0, 0.25, 0.75}};
  }
  throw input_error("unknown toy scenario");
}

}  // namespace

ToyScenario toy_scenario_from_name(const std::string& name) {
  std::string s = name;
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "separable") return ToyScenario::separable;
  if (s == "symmetric-full" || s == "sym-full") return ToyScenario::symmetric_full;
  if (s == "symmetric-partial" || s == "sym-partial") return ToyScenario::symmetric_partial;
  if (s == "asymmetric-full" || s == "asym-full") return ToyScenario::asymmetric_full;
  if (s == "asymmetric-partial" || s == "asym-partial") return ToyScenario::asymmetric_partial;
  throw input_error("unknown toy scenario: " + name +
                    " (expected separable, symmetric-full, symmetric-partial, asymmetric-full, "
                    "or asymmetric-partial)");
}

Instance toy(ToyScenario scenario, ToyVariant variant) {
  Instance inst;
  inst.net = parallel_network({15, 10, 10, 15});
  inst.od = single_pair_demand(60);
  inst.model = CostModel::linear(inst.net, {15, 10, 10, 15},
                                 SparseMatrix::from_dense(toy_coeffs(scenario, variant)));
  return inst;
}

Instance nonmonotone_demo() {
  Instance inst;
  inst.net = parallel_network({10, 10});
  inst.od = single_pair_demand(10);
  inst.model = CostModel::linear(inst.net, {10, 10}, SparseMatrix::from_dense({{1, 2}, {2, 1}}));
  return inst;
}

std::vector<double> toy_equilibrium(ToyScenario scenario, ToyVariant variant) {
  const bool exact = variant == ToyVariant::exact;
  switch (scenario) {
    case ToyScenario::separable:
      return {12.5, 17.5, 17.5, 12.5};
    case ToyScenario::symmetric_full:
      return exact ? std::vector<double>{7.5, 22.5, 22.5, 7.5}
                   : std::vector<double>{2495.0 / 333.0, 7495.0 / 333.0, 7495.0 / 333.0,
                                         2495.0 / 333.0};
    case ToyScenario::symmetric_partial:
      return {10, 20, 20, 10};
    case ToyScenario::asymmetric_full:
      return exact ? std::vector<double>{1190.0 / 141.0, 1030.0 / 47.0, 3190.0 / 141.0,
                                         330.0 / 47.0}
                   : std::vector<double>{8.4287320967563293, 21.933379910877846,
                                         22.615002513483347, 7.0228854788824799};
    case ToyScenario::asymmetric_partial:
      return {200.0 / 19.0, 370.0 / 19.0, 370.0 / 19.0, 200.0 / 19.0};
  }
  throw input_error("unknown toy scenario");
}

}  // namespace fixtures
}  // namespace stap
