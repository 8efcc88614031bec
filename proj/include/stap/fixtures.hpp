#pragma once

#include <string>

#include "stap/cost_model.hpp"
#include "stap/network.hpp"

namespace stap {
namespace fixtures {

enum class ToyScenario {
  separable,
  symmetric_full,
  symmetric_partial,
  asymmetric_full,
  asymmetric_partial,
};

// Coefficient variants: `printed` uses the three-decimal coefficients
// (0.167, 0.183, 0.15) exactly as tabulated; `exact` uses the fraction family
// they round from (1/6, 11/60, 9/60). Scenarios without rounded coefficients
// are identical across variants.
enum class ToyVariant { printed, exact };

ToyScenario toy_scenario_from_name(const std::string& name);

struct Instance {
  Network net;
  OdMatrix od;
  CostModel model;
};

// Four parallel links, one OD pair, demand 60; linear costs per scenario.
Instance toy(ToyScenario scenario, ToyVariant variant = ToyVariant::printed);

// Two parallel links, demand 10, symmetric non-monotone interaction with
// exactly three equilibria: (0,10), (5,5), (10,0).
Instance nonmonotone_demo();

// Equilibrium flows of the toy scenarios (equal-times analytic solutions).
std::vector<double> toy_equilibrium(ToyScenario scenario, ToyVariant variant = ToyVariant::printed);

}  // namespace fixtures
}  // namespace stap
