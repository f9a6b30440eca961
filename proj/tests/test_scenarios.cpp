#include <doctest.h>

#include <chrono>

#include <nlohmann/json.hpp>

#include "phsim/scenarios.hpp"

using namespace phsim;
using nlohmann::json;

TEST_CASE("the catalog lists the expected presets") {
  const auto catalog = list_scenarios();
  auto has = [&](const char* name) {
    for (const auto& s : catalog)
      if (s.name == name) return true;
    return false;
  };
  CHECK(has("wave-sector-damper"));
  CHECK(has("eb-beam-collocated"));
  CHECK(has("wave-neumann-conservative"));
  CHECK(catalog.size() >= 6);
  for (const auto& s : catalog) CHECK_FALSE(s.note.empty());
}

TEST_CASE("instantiate: sector parameters and Dirichlet wiring") {
  auto inst = instantiate("wave-sector-damper", {{"kappa", 2.0}});
  REQUIRE(inst.damper.has_value());
  const auto rep = verify_sector(*inst.damper, 2.0, 400, 1e-6, 1e3, 1);
  CHECK(rep.ok);
  CHECK(rep.kappa_tilde == doctest::Approx(0.25));

  // Dirichlet left: the first input port reads z1(0) (so the zero map pins it)
  Vector trace(4);
  trace << 0.3, -0.7, 1.1, 0.4;  // (z1(1), z2(1), z1(0), z2(0))
  const PortVector p = inst.model->extract_ports(trace);
  CHECK(p.u(0) == doctest::Approx(1.1).epsilon(1e-13));
  CHECK(p.u(1) == doctest::Approx(-0.7).epsilon(1e-13));
  CHECK(p.y(0) == doctest::Approx(-0.4).epsilon(1e-13));
  CHECK(p.y(1) == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("override validation") {
  CHECK_THROWS_AS(instantiate("wave-sector-damper", {{"dt", -0.1}}), InvalidOverrideError);
  CHECK_THROWS_AS(instantiate("wave-sector-damper", {{"dt", 0.0}}), InvalidOverrideError);
  CHECK_THROWS_AS(instantiate("wave-sector-damper", {{"no_such_key", 1}}), InvalidOverrideError);
  CHECK_THROWS_AS(instantiate("wave-sector-damper", {{"stepper", "rk4"}}), InvalidOverrideError);
  CHECK_THROWS_AS(instantiate("not-a-scenario", json::object()), UnknownScenarioError);
}

TEST_CASE("every catalog scenario builds, verifies and runs to T = 1 on 64 cells") {
  const auto t_start = std::chrono::steady_clock::now();
  for (const auto& info : list_scenarios()) {
    CAPTURE(info.name);
    auto inst = instantiate(info.name, {{"n_cells", 64}, {"T", 1.0}});
    CHECK(sample_passivity(*inst.model, 20, 3).ok);
    if (inst.loop.static_feedback) {
      CHECK(verify_monotone(*inst.loop.static_feedback, 100, 3).ok);
    } else {
      CHECK(verify_controller(*inst.loop.controller, 50, 1.0, 3).ok);
    }
    const EnergyTrace tr = run(inst.loop, inst.x0, inst.xc0);
    CHECK(tr.size() > 1);
    for (double e : tr.E_state) CHECK(std::isfinite(e));
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  CHECK(elapsed < 5.0);
}

TEST_CASE("outcome tags are consistent with the runs") {
  SUBCASE("conservative") {
    auto inst = instantiate("wave-neumann-conservative", json::object());
    REQUIRE(inst.tag == "conservative");
    const EnergyTrace tr = run(inst.loop, inst.x0);
    CHECK(std::abs(tr.E_state.back() - tr.E_state.front()) <= 1e-9 * tr.E_state.front());
  }
  SUBCASE("exponential decay presets fit a clean negative rate") {
    for (const char* name :
         {"wave-sector-damper", "eb-beam-damper", "eb-beam-collocated", "order2-bulk-damped"}) {
      CAPTURE(name);
      auto inst = instantiate(name, json::object());
      REQUIRE(inst.tag == "exponential-decay");
      const EnergyTrace tr = run(inst.loop, inst.x0, inst.xc0);
      const DecayFit fit = estimate_decay(tr);
      CHECK(fit.omega_hat < 0.0);
      CHECK(fit.fit_quality >= 0.99);
    }
  }
  SUBCASE("exponential-decay presets pass their applicable condition checkers") {
    for (const char* name :
         {"wave-sector-damper", "eb-beam-damper", "eb-beam-collocated", "order2-bulk-damped"}) {
      CAPTURE(name);
      auto inst = instantiate(name, json::object());
      CHECK(check_boundary_bound(*inst.model, inst.port_use, inst.profile).pass);
      if (inst.model->order() == 2) CHECK(check_order2_condition(*inst.model).pass);
      if (is_eb_structured(*inst.model)) CHECK(check_eb_condition(*inst.model).pass);
    }
  }
  SUBCASE("the sector check fails globally for the saturating damper") {
    auto inst = instantiate("wave-saturating-damper", json::object());
    REQUIRE(inst.tag == "asymptotic-only");
    REQUIRE(inst.damper.has_value());
    CHECK_FALSE(verify_sector(*inst.damper, 1.0, 400, 1e-6, 1e3, 1).ok);
    CHECK(verify_sector(*inst.damper, 1.0, 400, 1e-6, 1.0, 1).ok);
  }
}
