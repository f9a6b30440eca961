#pragma once

#include <nlohmann/json_fwd.hpp>

#include "phsim/simulate.hpp"
#include "phsim/stability.hpp"

namespace phsim {

struct ScenarioInfo {
  std::string name;
  std::string note;  // provenance
  std::string tag;   // exponential-decay | conservative | asymptotic-only
};

struct Instantiated {
  ClosedLoop loop;
  Vector x0;
  Vector xc0;
  std::string tag;
  std::shared_ptr<const PhsModel> model;
  std::optional<double> kappa;        // sector parameter when meaningful
  std::optional<MonotoneMap> damper;  // the right-end scalar damper when present
  QProfile profile = QProfile::N1;
  PortUse port_use;
};

std::vector<ScenarioInfo> list_scenarios();

class UnknownScenarioError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class InvalidOverrideError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Builds a fully validated closed loop for a catalog scenario. Overrides are
/// a flat JSON object (n_cells, dt, T, stepper, kappa, level, left_bc,
/// amplitude, dissipation, seed-dependent initial data); unknown keys are
/// rejected.
Instantiated instantiate(const std::string& name, const nlohmann::json& overrides,
                         std::uint64_t seed = 0);

}  // namespace phsim
