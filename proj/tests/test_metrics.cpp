#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "stap/cost_model.hpp"
#include "stap/fixtures.hpp"
#include "stap/metrics.hpp"
#include "stap/network.hpp"
#include "stap/solvers.hpp"
#include "stap/weights.hpp"

using namespace stap;

TEST_CASE("tstt and vmt are flow-weighted sums") {
  std::vector<double> x = {10, 20};
  std::vector<double> t = {2, 3};
  CHECK(tstt(x, t) == doctest::Approx(80.0));
  std::vector<double> zero = {0, 0};
  CHECK(tstt(zero, t) == 0.0);
  std::vector<double> ones = {1, 1};
  CHECK(vmt(x, ones) == doctest::Approx(30.0));
  std::vector<double> lens = {2.5, 4.0};
  CHECK(vmt(x, lens) == doctest::Approx(105.0));
}

TEST_CASE("relative gap at the all-or-nothing start point") {
  // all demand piled on one tied-shortest link makes the gap (TSTT-SPTT)/SPTT
  fixtures::Instance inst = fixtures::toy(fixtures::ToyScenario::separable);
  std::vector<double> x = {0, 60, 0, 0};
  // t = (15, 70, 10, 15); TSTT = 4200; shortest path now costs 10 -> SPTT 600
  CHECK(relative_gap(inst.model, inst.od, x) == doctest::Approx(6.0).epsilon(1e-12));

  fixtures::Instance sym = fixtures::toy(fixtures::ToyScenario::symmetric_full,
                                         fixtures::ToyVariant::exact);
  CHECK(relative_gap(sym.model, sym.od, x) == doctest::Approx(1.0).epsilon(1e-12));
  fixtures::Instance printed = fixtures::toy(fixtures::ToyScenario::symmetric_full,
                                             fixtures::ToyVariant::printed);
  CHECK(relative_gap(printed.model, printed.od, x) == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("relative gap vanishes at equilibrium and without demand") {
  fixtures::Instance inst = fixtures::toy(fixtures::ToyScenario::separable);
  std::vector<double> xeq = fixtures::toy_equilibrium(fixtures::ToyScenario::separable);
  CHECK(relative_gap(inst.model, inst.od, xeq) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(relative_gap(inst.model, inst.od, xeq) >= 0.0);

  OdMatrix empty;
  empty.num_zones = inst.od.num_zones;
  empty.rows.resize(empty.num_zones);
  CHECK(relative_gap(inst.model, empty, xeq) == 0.0);
}

TEST_CASE("relative gap is invariant under uniform scaling of constant costs") {
  fixtures::Instance inst = fixtures::toy(fixtures::ToyScenario::separable);
  std::vector<double> c1 = {15, 10, 10, 15}, c3 = {45, 30, 30, 45};
  SparseMatrix zero(4);  // no flow dependence at all
  CostModel m1 = CostModel::linear(inst.net, c1, zero);
  CostModel m3 = CostModel::linear(inst.net, c3, zero);
  std::vector<double> x = {7, 12, 30, 11};
  CHECK(relative_gap(m1, inst.od, x) ==
        doctest::Approx(relative_gap(m3, inst.od, x)).epsilon(1e-14));
}

TEST_CASE("delta metrics compare against the reference equilibrium") {
  fixtures::Instance inst = fixtures::toy(fixtures::ToyScenario::separable);
  std::vector<double> x_ref = fixtures::toy_equilibrium(fixtures::ToyScenario::separable);
  DeltaMetrics self = delta_metrics(inst.model, x_ref, x_ref);
  CHECK(self.delta_tstt == doctest::Approx(0.0));
  CHECK(self.delta_vmt == doctest::Approx(0.0));

  // hand-checkable ratio: reference TSTT 1650 (all times 27.5)
  std::vector<double> x = {12.5, 18.5, 16.5, 12.5};  // same totals, shifted flows
  DeltaMetrics d = delta_metrics(inst.model, x, x_ref);
  double t_ref = 60 * 27.5;
  std::vector<double> t = inst.model.link_times(x);
  double t_cur = tstt(x, t);
  CHECK(d.delta_tstt == doctest::Approx((t_cur - t_ref) / t_ref).epsilon(1e-12));

  std::vector<double> zeros = {0, 0, 0, 0};
  CHECK_THROWS_AS(delta_metrics(inst.model, x, zeros), input_error);
}

TEST_CASE("proportion of unconverged links follows the set definition") {
  std::vector<double> x_ref = {10, 20};
  std::vector<double> x = {10.05, 25};
  // link 1: |10.05-10| = 0.05 < 0.1 converged; link 2: 5 > 0.2 unconverged
  CHECK(pul(x, x_ref, 0.01, 1e-9) == doctest::Approx(0.5));
  CHECK(pul(x_ref, x_ref, 0.01, 1e-9) == 0.0);

  // zero-flow reference links use the absolute tolerance
  std::vector<double> ref0 = {0, 20};
  std::vector<double> near0 = {1e-12, 20};
  std::vector<double> far0 = {0.5, 20};
  CHECK(pul(near0, ref0, 0.01, 1e-9) == 0.0);
  CHECK(pul(far0, ref0, 0.01, 1e-9) == doctest::Approx(0.5));
}

TEST_CASE("pul is monotone in epsilon") {
  std::vector<double> x_ref = {10, 20, 30, 40, 50};
  std::vector<double> x = {10.2, 20.1, 33, 39, 51};
  double prev = 1.0;
  for (double eps : {0.001, 0.01, 0.05, 0.2}) {
    double v = pul(x, x_ref, eps, 1e-9);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
}

TEST_CASE("default zero tolerance scales with demand per link") {
  CHECK(default_zero_tol(360600.0, 76) == doctest::Approx(1e-9 * 360600.0 / 76));
  CHECK(default_zero_tol(0.0, 10) == 0.0);
}

TEST_CASE("crossing snapshots record the first pass under each level") {
  ConvergenceLog log;
  std::vector<double> x1 = {1, 2}, x2 = {3, 4}, x3 = {5, 6};
  log.record_crossings(kDefaultGapLevels, 1, 0.5, 0.1, x1);
  CHECK(log.snapshots.empty());
  log.record_crossings(kDefaultGapLevels, 4, 5e-4, 0.2, x2);
  REQUIRE(log.snapshots.size() == 1);
  CHECK(log.snapshots[0].level == 1e-3);
  CHECK(log.snapshots[0].iteration == 4);
  CHECK(log.snapshots[0].x == x2);
  // a later, equally small gap does not overwrite the first crossing
  log.record_crossings(kDefaultGapLevels, 5, 4e-4, 0.3, x3);
  CHECK(log.snapshots.size() == 1);
  CHECK(log.snapshots[0].iteration == 4);
  // one big jump can cross several levels at once
  log.record_crossings(kDefaultGapLevels, 9, 9e-9, 0.4, x3);
  REQUIRE(log.snapshots.size() == 6);
  for (size_t i = 1; i < log.snapshots.size(); ++i)
    CHECK(log.snapshots[i].level < log.snapshots[i - 1].level);
}

TEST_CASE("every solve reaching 1e-8 carries exactly six decreasing snapshots") {
  fixtures::Instance inst = fixtures::toy(fixtures::ToyScenario::symmetric_full,
                                          fixtures::ToyVariant::exact);
  SolverConfig config;
  config.algorithm = Algorithm::gp;
  config.rg_target = 1e-8;
  config.max_iterations = 200;
  SolveResult r = gp_solve(inst.model, inst.od, config);
  REQUIRE(r.converged);
  REQUIRE(r.log.snapshots.size() == 6);
  for (size_t i = 0; i < 6; ++i) {
    CHECK(r.log.snapshots[i].level == kDefaultGapLevels[i]);
    if (i > 0) CHECK(r.log.snapshots[i].level < r.log.snapshots[i - 1].level);
    CHECK(r.log.snapshots[i].rg <= r.log.snapshots[i].level);
  }
}

TEST_CASE("snapshot reports carry absolute deltas and the epsilon used") {
  fixtures::Instance inst = fixtures::toy(fixtures::ToyScenario::separable);
  SolverConfig config;
  config.algorithm = Algorithm::gp;
  config.rg_target = 1e-8;
  config.max_iterations = 200;
  SolveResult r = gp_solve(inst.model, inst.od, config);
  REQUIRE(r.converged);
  std::vector<double> x_ref = fixtures::toy_equilibrium(fixtures::ToyScenario::separable);
  std::vector<MetricReport> reports = snapshot_reports(r.log, inst.model, x_ref, 0.01, 1e-9);
  REQUIRE(reports.size() == r.log.snapshots.size());
  for (size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].gap_level == r.log.snapshots[i].level);
    CHECK(reports[i].epsilon == 0.01);
    CHECK(reports[i].delta_tstt >= 0.0);
    CHECK(reports[i].delta_vmt >= 0.0);
    CHECK(reports[i].delta_tstt ==
          doctest::Approx(std::abs(reports[i].delta_tstt_signed)).epsilon(1e-15));
    CHECK(reports[i].pul >= 0.0);
    CHECK(reports[i].pul <= 1.0);
  }
  // the final snapshot sits at RG <= 1e-8: metrics are essentially stabilized
  CHECK(reports.back().delta_tstt < 1e-6);
  CHECK(reports.back().pul == 0.0);
}

TEST_CASE("aggregate deltas shrink as the gap tightens") {
  fixtures::Instance inst = fixtures::toy(fixtures::ToyScenario::symmetric_partial);
  SolverConfig config;
  config.algorithm = Algorithm::gp;
  config.rg_target = 1e-8;
  config.max_iterations = 500;
  SolveResult r = gp_solve(inst.model, inst.od, config);
  REQUIRE(r.converged);
  std::vector<double> x_ref =
      fixtures::toy_equilibrium(fixtures::ToyScenario::symmetric_partial);
  std::vector<MetricReport> reports = snapshot_reports(r.log, inst.model, x_ref, 0.01, 1e-9);
  int inversions = 0;
  for (size_t i = 1; i < reports.size(); ++i)
    if (reports[i].delta_tstt > reports[i - 1].delta_tstt + 1e-3) ++inversions;
  CHECK(inversions <= 1);
}
