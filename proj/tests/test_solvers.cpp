#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "stap/fixtures.hpp"
#include "stap/graph.hpp"
#include "stap/interactions.hpp"
#include "stap/metrics.hpp"
#include "stap/network.hpp"
#include "stap/solvers.hpp"

using namespace stap;
using fixtures::ToyScenario;
using fixtures::ToyVariant;

namespace {

const std::string kSfNet = std::string(STAP_DATA_DIR) + "/siouxfalls/SiouxFalls_net.tntp";
const std::string kSfTrips = std::string(STAP_DATA_DIR) + "/siouxfalls/SiouxFalls_trips.tntp";

SolverConfig quick(Algorithm alg, double rg, long iters) {
  SolverConfig c;
  c.algorithm = alg;
  c.rg_target = rg;
  c.max_iterations = iters;
  return c;
}

void check_toy_equilibrium(Algorithm alg, ToyScenario s, ToyVariant v, double rg, long iters,
                           double flow_tol) {
  fixtures::Instance inst = fixtures::toy(s, v);
  SolveResult r = solve(inst.model, inst.od, quick(alg, rg, iters));
  CHECK(r.converged);
  CHECK(r.log.final_rg <= rg);
  std::vector<double> xeq = fixtures::toy_equilibrium(s, v);
  for (int a = 0; a < 4; ++a)
    CHECK(r.state.x[a] == doctest::Approx(xeq[a]).epsilon(flow_tol));
}

}  // namespace

TEST_CASE("newton shift equalizes two parallel paths in one step") {
  fixtures::Instance inst = fixtures::toy(ToyScenario::separable);
  std::vector<double> x = {0, 60, 0, 0};
  std::vector<double> t = inst.model.link_times(x);
  std::vector<int> cheap = {2}, costly = {1};
  // cost difference 60, curvature sum 2
  CHECK(newton_shift(inst.model, x, t, cheap, costly) == doctest::Approx(30.0));
  // damping scales the step
  CHECK(newton_shift(inst.model, x, t, cheap, costly, 0.5) == doctest::Approx(15.0));
  // the cap truncates it
  CHECK(newton_shift(inst.model, x, t, cheap, costly, 1.0, 10.0) == doctest::Approx(10.0));
  // never shifts more than the donor path carries
  std::vector<double> small = {0, 5, 0, 0};
  t = inst.model.link_times(small);
  CHECK(newton_shift(inst.model, small, t, cheap, costly) == doctest::Approx(2.5));
  std::vector<double> tiny = {0, 5, 4, 0};
  t = inst.model.link_times(tiny);
  // raw step (15 - 14) / 2 = 0.5 stays below the donor flow 5
  CHECK(newton_shift(inst.model, tiny, t, cheap, costly) == doctest::Approx(0.5));
}

TEST_CASE("newton shift falls back when curvature is nonpositive") {
  fixtures::Instance nm = fixtures::nonmonotone_demo();
  std::vector<double> x = {2, 8};
  std::vector<double> t = nm.model.link_times(x);
  std::vector<int> cheap = {1}, costly = {0};
  // general curvature 1+1-2-2 = -2 <= 0; own-flow fallback gives 2, so the
  // raw step 6/2 = 3 is truncated at the 2 units the donor path carries
  CHECK(newton_denominator_general(nm.model, x, cheap, costly) == doctest::Approx(-2.0));
  CHECK(newton_shift(nm.model, x, t, cheap, costly) == doctest::Approx(2.0));

  // constant costs: both denominator forms vanish, the shift is zero even
  // though the cost difference and the donor flow are positive
  fixtures::Instance sep = fixtures::toy(ToyScenario::separable);
  SparseMatrix zero(4);
  CostModel flat = CostModel::linear(sep.net, {15, 10, 10, 15}, zero);
  std::vector<double> y = {30, 30, 0, 0};
  std::vector<double> tf = flat.link_times(y);
  std::vector<int> cheap2 = {2}, costly2 = {0};
  CHECK(tf[0] - tf[2] == doctest::Approx(5.0));
  CHECK(newton_shift(flat, y, tf, cheap2, costly2) == 0.0);
}

TEST_CASE("general and symmetric curvature forms agree on symmetric linear models") {
  // exact equality of the two denominator forms needs an exactly symmetric
  // Jacobian, which only the linear family provides (BPR slopes vary by link)
  Network net = load_network_file(kSfNet);
  GenSpec spec;
  spec.degrees = 2;
  spec.symmetric = true;
  spec.seed = 5;
  std::vector<double> constants(net.num_links());
  for (int a = 0; a < net.num_links(); ++a) constants[a] = net.links[a].free_flow_time;
  CostModel model = CostModel::linear(net, constants, generate_weights(net, spec));
  OdMatrix od = load_trips_file(kSfTrips);
  std::vector<double> times = constants;
  AonResult aon = all_or_nothing(net, od, times);
  std::vector<double> t1 = model.link_times(aon.flows);

  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> zone(0, net.num_zones - 1);
  int tested = 0;
  for (int attempt = 0; attempt < 5000 && tested < 50; ++attempt) {
    int o = zone(rng), d = zone(rng);
    if (o == d) continue;
    std::vector<int> pa = trace_path(net, shortest_paths(net, times, o), o, d);
    std::vector<int> pb = trace_path(net, shortest_paths(net, t1, o), o, d);
    if (pa == pb) continue;
    double general = newton_denominator_general(model, aon.flows, pa, pb);
    double symmetric = newton_denominator_symmetric(model, aon.flows, pa, pb);
    CHECK(general == doctest::Approx(symmetric).epsilon(1e-12));
    ++tested;
  }
  CHECK(tested == 50);
}

TEST_CASE("msa follows the 1/(k+1) averaging schedule exactly") {
  fixtures::Instance inst = fixtures::toy(ToyScenario::separable);
  SolveResult r1 = msa_solve(inst.model, inst.od, quick(Algorithm::msa, 1e-12, 1));
  CHECK(r1.state.x == std::vector<double>{0, 60, 0, 0});
  CHECK(r1.log.iterations.front().rg == doctest::Approx(6.0));
  CHECK_FALSE(r1.converged);

  SolveResult r2 = msa_solve(inst.model, inst.od, quick(Algorithm::msa, 1e-12, 2));
  CHECK(r2.state.x[0] == doctest::Approx(0.0));
  CHECK(r2.state.x[1] == doctest::Approx(30.0));
  CHECK(r2.state.x[2] == doctest::Approx(30.0));

  SolveResult r3 = msa_solve(inst.model, inst.od, quick(Algorithm::msa, 1e-12, 3));
  CHECK(r3.state.x[0] == doctest::Approx(20.0));
  CHECK(r3.state.x[1] == doctest::Approx(20.0));
  CHECK(r3.state.x[2] == doctest::Approx(20.0));
  CHECK(r3.state.x[3] == doctest::Approx(0.0));
}

TEST_CASE("frank-wolfe takes the cost-zeroing step along the direction") {
  fixtures::Instance inst = fixtures::toy(ToyScenario::separable);
  // step 1: direction toward link 2, g(lambda) = -3600 + 7200 lambda
  SolveResult r2 = fw_solve(inst.model, inst.od, quick(Algorithm::fw, 1e-12, 2));
  CHECK(r2.state.x[1] == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(r2.state.x[2] == doctest::Approx(30.0).epsilon(1e-9));
  // step 2: tie breaks to link 0, g(lambda) = -1500 + 5400 lambda, lambda* = 5/18
  SolveResult r3 = fw_solve(inst.model, inst.od, quick(Algorithm::fw, 1e-12, 3));
  CHECK(r3.state.x[0] == doctest::Approx(50.0 / 3).epsilon(1e-9));
  CHECK(r3.state.x[1] == doctest::Approx(65.0 / 3).epsilon(1e-9));
  CHECK(r3.state.x[2] == doctest::Approx(65.0 / 3).epsilon(1e-9));
  CHECK(r3.state.x[3] == doctest::Approx(0.0));
}

TEST_CASE("all four algorithms find every toy equilibrium") {
  const ToyScenario scenarios[] = {ToyScenario::separable, ToyScenario::symmetric_full,
                                   ToyScenario::symmetric_partial, ToyScenario::asymmetric_full,
                                   ToyScenario::asymmetric_partial};
  for (ToyScenario s : scenarios) {
    for (ToyVariant v : {ToyVariant::printed, ToyVariant::exact}) {
      // newton-based solvers pin the equilibrium tightly
      check_toy_equilibrium(Algorithm::gp, s, v, 1e-10, 500, 1e-6);
      check_toy_equilibrium(Algorithm::algb, s, v, 1e-10, 500, 1e-6);
      // averaging-based solvers approach it sublinearly
      check_toy_equilibrium(Algorithm::msa, s, v, 1e-5, 500000, 5e-3);
      check_toy_equilibrium(Algorithm::fw, s, v, 1e-7, 200000, 1e-3);
    }
  }
}

TEST_CASE("gp path flows stay consistent with link flows and demand") {
  Network net = load_network_file(kSfNet);
  OdMatrix od = load_trips_file(kSfTrips);
  CostModel model = CostModel::bpr_separable(net);
  SolveResult r = gp_solve(model, od, quick(Algorithm::gp, 1e-6, 200));
  REQUIRE(r.converged);

  std::vector<double> from_paths(net.num_links(), 0.0);
  for (const auto& [odpair, paths] : r.state.paths) {
    double total = 0;
    for (const PathFlow& p : paths) {
      CHECK(p.flow >= 0.0);
      for (int a : p.links) from_paths[a] += p.flow;
      total += p.flow;
      // each stored path really connects the OD pair
      REQUIRE_FALSE(p.links.empty());
      CHECK(net.links[p.links.front()].tail == odpair.first);
      CHECK(net.links[p.links.back()].head == odpair.second);
      for (size_t i = 1; i < p.links.size(); ++i)
        CHECK(net.links[p.links[i - 1]].head == net.links[p.links[i]].tail);
    }
    CHECK(total == doctest::Approx(od.demand(odpair.first, odpair.second)).epsilon(1e-10));
  }
  for (int a = 0; a < net.num_links(); ++a)
    CHECK(from_paths[a] == doctest::Approx(r.state.x[a]).epsilon(1e-9));
}

TEST_CASE("algb bushes partition the flow and stay acyclic") {
  Network net = load_network_file(kSfNet);
  OdMatrix od = load_trips_file(kSfTrips);
  CostModel model = CostModel::bpr_separable(net);
  SolveResult r = algb_solve(model, od, quick(Algorithm::algb, 1e-6, 200));
  REQUIRE(r.converged);
  REQUIRE_FALSE(r.state.bushes.empty());

  std::vector<double> total(net.num_links(), 0.0);
  for (const Bush& bush : r.state.bushes) {
    std::vector<int> position(net.num_nodes, -1);
    for (size_t i = 0; i < bush.topo_order.size(); ++i)
      position[bush.topo_order[i]] = static_cast<int>(i);
    CHECK(position[bush.origin] == 0);
    for (int a = 0; a < net.num_links(); ++a) {
      CHECK(bush.link_flow[a] >= -1e-12);
      total[a] += bush.link_flow[a];
      if (bush.link_flow[a] > 1e-12) CHECK(static_cast<bool>(bush.in_bush[a]));
      if (bush.in_bush[a]) {
        // bush links always point forward in the topological order
        int u = net.links[a].tail, v = net.links[a].head;
        REQUIRE(position[u] >= 0);
        REQUIRE(position[v] >= 0);
        CHECK(position[u] < position[v]);
      }
    }
  }
  for (int a = 0; a < net.num_links(); ++a)
    CHECK(total[a] == doctest::Approx(r.state.x[a]).epsilon(1e-9));
}

TEST_CASE("solvers reject demand without a route") {
  Network net;
  net.num_nodes = 3;
  net.num_zones = 3;
  net.first_thru_node = 0;
  Link l;
  l.tail = 0;
  l.head = 1;
  l.capacity = 10;
  l.length = 1;
  l.free_flow_time = 1;
  l.bpr_b = 0.15;
  l.bpr_power = 4;
  net.links.push_back(l);
  OdMatrix od;
  od.num_zones = 3;
  od.rows.resize(3);
  od.add(0, 2, 4.0);  // node 2 has no incoming link
  CostModel model = CostModel::bpr_separable(net);
  for (Algorithm alg : {Algorithm::msa, Algorithm::fw, Algorithm::gp, Algorithm::algb})
    CHECK_THROWS_AS(solve(model, od, quick(alg, 1e-6, 10)), input_error);
}

TEST_CASE("convergence logs are ordered and honest") {
  fixtures::Instance inst = fixtures::toy(ToyScenario::symmetric_full, ToyVariant::exact);
  for (Algorithm alg : {Algorithm::msa, Algorithm::fw, Algorithm::gp, Algorithm::algb}) {
    SolveResult r = solve(inst.model, inst.od, quick(alg, 1e-5, 500000));
    CHECK(r.converged);
    CHECK(r.log.converged);
    REQUIRE_FALSE(r.log.iterations.empty());
    CHECK(r.log.iterations.front().rg == doctest::Approx(1.0).epsilon(1e-12));
    for (size_t i = 0; i < r.log.iterations.size(); ++i) {
      CHECK(r.log.iterations[i].iteration == static_cast<int>(i) + 1);
      if (i > 0)
        CHECK(r.log.iterations[i].wall_seconds >= r.log.iterations[i - 1].wall_seconds);
      // symmetric model: every record carries the objective
      CHECK(r.log.iterations[i].objective.has_value());
    }
    CHECK(r.log.final_rg == r.log.iterations.back().rg);
    CHECK(r.log.final_rg <= 1e-5);
    CHECK(r.iterations == static_cast<int>(r.log.iterations.size()));
  }

  // asymmetric models have no objective to log
  fixtures::Instance asym = fixtures::toy(ToyScenario::asymmetric_full);
  SolveResult r = gp_solve(asym.model, asym.od, quick(Algorithm::gp, 1e-8, 200));
  REQUIRE_FALSE(r.log.iterations.empty());
  for (const IterationRecord& rec : r.log.iterations)
    CHECK_FALSE(rec.objective.has_value());
}

TEST_CASE("unconverged runs report their best state honestly") {
  // 10 averaging steps keep flows on a multiple-of-6 lattice that cannot
  // contain the equilibrium (at 24 steps msa hits it exactly and stops early)
  fixtures::Instance inst = fixtures::toy(ToyScenario::separable);
  SolveResult r = msa_solve(inst.model, inst.od, quick(Algorithm::msa, 1e-12, 10));
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.log.converged);
  CHECK(r.iterations == 10);
  CHECK(r.log.final_rg > 1e-12);
  double sum = 0;
  for (double v : r.state.x) sum += v;
  CHECK(sum == doctest::Approx(60.0));
}

TEST_CASE("damping and inner-pass knobs preserve correctness") {
  fixtures::Instance inst = fixtures::toy(ToyScenario::asymmetric_full);
  SolverConfig damped = quick(Algorithm::gp, 1e-9, 2000);
  damped.newton_damping = 0.5;
  SolveResult r = gp_solve(inst.model, inst.od, damped);
  CHECK(r.converged);
  std::vector<double> xeq = fixtures::toy_equilibrium(ToyScenario::asymmetric_full);
  for (int a = 0; a < 4; ++a) CHECK(r.state.x[a] == doctest::Approx(xeq[a]).epsilon(1e-5));

  SolverConfig one_pass = quick(Algorithm::algb, 1e-9, 2000);
  one_pass.inner_iterations_per_main = 1;
  SolveResult rb = algb_solve(inst.model, inst.od, one_pass);
  CHECK(rb.converged);
  for (int a = 0; a < 4; ++a) CHECK(rb.state.x[a] == doctest::Approx(xeq[a]).epsilon(1e-5));
}

TEST_CASE("identical configurations give bit-identical runs") {
  Network net = load_network_file(kSfNet);
  OdMatrix od = load_trips_file(kSfTrips);
  GenSpec spec;
  spec.degrees = 2;
  spec.symmetric = false;
  spec.seed = 6;
  CostModel model = CostModel::bpr_interacting(net, generate_weights(net, spec));
  for (Algorithm alg : {Algorithm::msa, Algorithm::fw, Algorithm::gp, Algorithm::algb}) {
    SolveResult a = solve(model, od, quick(alg, 1e-5, 300));
    SolveResult b = solve(model, od, quick(alg, 1e-5, 300));
    CHECK(a.state.x == b.state.x);  // exact, not approximate
    CHECK(a.iterations == b.iterations);
    CHECK(a.log.final_rg == b.log.final_rg);
  }
}

TEST_CASE("gap info agrees with the standalone relative gap") {
  Network net = load_network_file(kSfNet);
  OdMatrix od = load_trips_file(kSfTrips);
  CostModel model = CostModel::bpr_separable(net);
  std::vector<double> times(net.num_links());
  for (int a = 0; a < net.num_links(); ++a) times[a] = net.links[a].free_flow_time;
  AonResult aon = all_or_nothing(net, od, times);
  std::vector<double> t = model.link_times(aon.flows);
  GapInfo info = gap_info(model, od, aon.flows, t);
  CHECK(info.rg == doctest::Approx(relative_gap(model, od, aon.flows)).epsilon(1e-14));
  CHECK(info.tstt == doctest::Approx(tstt(aon.flows, t)).epsilon(1e-14));
  REQUIRE(info.sptt > 0);
  CHECK(info.rg == doctest::Approx((info.tstt - info.sptt) / info.sptt).epsilon(1e-14));
  double total = 0;
  for (double v : info.aon_flows) total += v;
  CHECK(total > 0);
}
