#include <doctest.h>

#include <nlohmann/json.hpp>

#include "phsim/rng.hpp"
#include "phsim/scenarios.hpp"

using namespace phsim;

namespace {

std::shared_ptr<const PhsModel> eb_model(ScalarProfile h1, ScalarProfile h2) {
  ModelDesc d;
  d.order = 2;
  d.dim = 2;
  Matrix P2(2, 2);
  P2 << 0, -1, 1, 0;
  d.P = {Matrix::Zero(2, 2), Matrix::Zero(2, 2), P2};
  d.H = Hamiltonian::diag_profiles({h1, h2});
  Matrix NB = Matrix::Zero(4, 8), NC = Matrix::Zero(4, 8);
  NB(0, 4) = 1;
  NB(1, 6) = 1;
  NB(2, 3) = -1;
  NB(3, 1) = 1;
  NC(0, 7) = 1;
  NC(1, 5) = -1;
  NC(2, 0) = 1;
  NC(3, 2) = 1;
  std::tie(d.W_B, d.W_C) = ports_from_trace_selectors(d.P, 2, 2, NB, NC);
  return std::make_shared<PhsModel>(build_model(d));
}

}  // namespace

TEST_CASE("make_multiplier: direct cases and the doubling loop") {
  SUBCASE("alpha = 1, beta = 0, gamma = 1 gives e^zeta - 1") {
    const Multiplier m = make_multiplier(1.0, 0.0, 1.0);
    CHECK(m.lambda == doctest::Approx(1.0));
    CHECK(m.eval(0.0) == 0.0);
    CHECK(m.eval(1.0) == doctest::Approx(std::exp(1.0) - 1.0));
    CHECK(m.margin >= 0.0);
  }
  SUBCASE("gamma = 0 returns a small exponential with margin >= 0") {
    const Multiplier m = make_multiplier(1.0, 0.0, 0.0);
    CHECK(m.lambda <= 0.0201);
    CHECK(m.margin >= 0.0);
    CHECK(m.deriv(0.0) > 0.0);
  }
  SUBCASE("beta-dominant input triggers doubling and still verifies") {
    const Multiplier m = make_multiplier(1.0, 5.0, 1.0);
    for (int k = 0; k <= 256; ++k) {
      const double z = k / 256.0;
      CHECK(m.alpha * m.deriv(z) - m.beta * m.eval(z) >= 1.0 - 1e-12);
    }
  }
}

TEST_CASE("multiplier audit is exact for random constants") {
  CounterRng rng(71, "stability");
  for (int t = 0; t < 20; ++t) {
    const double a = rng.log_uniform(0.1, 10.0);
    const double b = rng.uniform(0.0, 10.0);
    const double g = rng.uniform(0.0, 5.0);
    const Multiplier m = make_multiplier(a, b, g);
    CHECK(m.margin >= 0.0);
    for (int k = 0; k <= 64; ++k) {
      const double z = k / 64.0;
      CHECK(m.alpha * m.deriv(z) - m.beta * m.eval(z) >= m.gamma - 1e-10);
    }
  }
}

TEST_CASE("lyapunov_q: gates, homogeneity and the c-hat bound") {
  auto wave = instantiate("wave-sector-damper", {{"n_cells", 32}});
  const auto& sys = *wave.loop.system;
  const Multiplier eta = make_multiplier(1.0, 0.0, 1.0);

  SUBCASE("zero state evaluates to zero") {
    CHECK(lyapunov_q(sys, QProfile::N1, eta, Vector::Zero(sys.state_dim())).value == 0.0);
  }
  SUBCASE("the 1 - zeta form is rejected for the order-1 profile") {
    CHECK_THROWS_AS(lyapunov_q(sys, QProfile::N1, Multiplier::one_minus_zeta(),
                               Vector::Zero(sys.state_dim())),
                    std::invalid_argument);
  }
  SUBCASE("quadratic homogeneity and |q| <= c_hat ||x||^2") {
    CounterRng rng(72, "stability");
    for (int t = 0; t < 10; ++t) {
      const Vector x = rng.normal_vec(sys.state_dim());
      const double a = rng.uniform(-3, 3);
      const auto q1 = lyapunov_q(sys, QProfile::N1, eta, x);
      const auto qa = lyapunov_q(sys, QProfile::N1, eta, Vector(a * x));
      CHECK(qa.value == doctest::Approx(a * a * q1.value).epsilon(1e-12));
      CHECK(std::abs(q1.value) <= q1.c_hat * sys.energy_inner(x, x) * (1.0 + 1e-10));
    }
  }
  SUBCASE("order-2 and EB profiles satisfy their c-hat bounds") {
    auto eb = instantiate("eb-beam-damper", {{"n_cells", 32}});
    auto o2 = instantiate("order2-bulk-damped", {{"n_cells", 32}});
    CounterRng rng(73, "stability");
    for (int t = 0; t < 10; ++t) {
      const Vector xe = rng.normal_vec(eb.loop.system->state_dim());
      const auto qe = lyapunov_q(*eb.loop.system, QProfile::EB, Multiplier::one_minus_zeta(), xe);
      CHECK(std::abs(qe.value) <=
            qe.c_hat * eb.loop.system->energy_inner(xe, xe) * (1.0 + 1e-10));
      const Vector xo = rng.normal_vec(o2.loop.system->state_dim());
      const auto qo = lyapunov_q(*o2.loop.system, QProfile::N2, Multiplier::one_minus_zeta(), xo);
      CHECK(std::abs(qo.value) <=
            qo.c_hat * o2.loop.system->energy_inner(xo, xo) * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("check_order2_condition") {
  SUBCASE("Euler-Bernoulli preset: all three terms vanish") {
    auto eb = instantiate("eb-beam-damper", nlohmann::json::object());
    const auto rep = check_order2_condition(*eb.model);
    CHECK(rep.pass);
    CHECK(rep.lhs == doctest::Approx(0.0));
  }
  SUBCASE("P0 = -0.1 I matches the hand computation") {
    auto o2 = instantiate("order2-bulk-damped", nlohmann::json::object());
    const auto rep = check_order2_condition(*o2.model);
    // (1/sqrt2)*0.2*||P2^{-1}|| + 0.5*0.01 with orthogonal P2
    CHECK(rep.lhs == doctest::Approx(0.2 / std::sqrt(2.0) + 0.005).epsilon(1e-12));
    CHECK(rep.pass);
  }
  SUBCASE("H' H^{-1} of norm 3 fails through term 1") {
    const auto m = eb_model(ScalarProfile::exponential(1.0, 3.0),
                            ScalarProfile::exponential(1.0, 3.0));
    const auto rep = check_order2_condition(*m);
    CHECK_FALSE(rep.pass);
    CHECK(rep.terms[0].second >= 3.0 - 1e-9);
  }
  SUBCASE("scaling H' up never flips fail to pass") {
    double prev = -1.0;
    for (double b : {0.5, 1.0, 2.0, 3.0}) {
      const auto m = eb_model(ScalarProfile::exponential(1.0, b),
                              ScalarProfile::exponential(1.0, b));
      const double lhs = check_order2_condition(*m).lhs;
      CHECK(lhs > prev);
      prev = lhs;
    }
  }
}

TEST_CASE("check_eb_condition matches scalar calculus") {
  SUBCASE("constant H passes with 0") {
    auto eb = instantiate("eb-beam-damper", nlohmann::json::object());
    const auto rep = check_eb_condition(*eb.model);
    CHECK(rep.pass);
    CHECK(rep.lhs == doctest::Approx(0.0));
  }
  SUBCASE("rho = e^{zeta/2} gives 0.5") {
    const auto m = eb_model(ScalarProfile::exponential(1.0, -0.5), ScalarProfile::constant(1.0));
    const auto rep = check_eb_condition(*m);
    CHECK(rep.pass);
    CHECK(rep.lhs == doctest::Approx(0.5).epsilon(1e-3));
  }
  SUBCASE("EI = e^{2 zeta} gives 2.0 and fails") {
    const auto m = eb_model(ScalarProfile::constant(1.0), ScalarProfile::exponential(1.0, 2.0));
    const auto rep = check_eb_condition(*m);
    CHECK_FALSE(rep.pass);
    CHECK(rep.lhs == doctest::Approx(2.0).epsilon(1e-3));
  }
  SUBCASE("structure gate") {
    auto o2 = instantiate("order2-bulk-damped", nlohmann::json::object());
    CHECK_THROWS_AS(check_eb_condition(*o2.model), std::invalid_argument);  // P0 != 0
  }
}

TEST_CASE("check_boundary_bound") {
  SUBCASE("wave example ports cover the right-end trace with c = 1") {
    auto wave = instantiate("wave-sector-damper", nlohmann::json::object());
    PortUse use{Matrix::Identity(2, 2), std::nullopt};
    const auto rep = check_boundary_bound(*wave.model, use, QProfile::N1);
    CHECK(rep.pass);
    CHECK(rep.lhs == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("projecting out both covering components leaves a kernel") {
    auto wave = instantiate("wave-sector-damper", nlohmann::json::object());
    Matrix Pi_out = Matrix::Zero(2, 2);
    Pi_out(0, 0) = 1.0;  // drops y_2 = z1(1)
    Matrix Pi_in = Matrix::Zero(2, 2);
    Pi_in(0, 0) = 1.0;   // drops u_2 = z2(1)
    PortUse use{Pi_out, Pi_in};
    const auto rep = check_boundary_bound(*wave.model, use, QProfile::N1);
    CHECK_FALSE(rep.pass);
    CHECK(std::isinf(rep.lhs));
  }
  SUBCASE("EB preset has a finite certificate") {
    auto eb = instantiate("eb-beam-damper", nlohmann::json::object());
    const auto rep = check_boundary_bound(*eb.model, eb.port_use, QProfile::EB);
    CHECK(rep.pass);
    CHECK(std::isfinite(rep.lhs));
  }
}

TEST_CASE("estimate_decay") {
  SUBCASE("exact exponential") {
    std::vector<double> ts, E;
    for (int k = 0; k <= 200; ++k) {
      ts.push_back(0.05 * k);
      E.push_back(std::exp(-2.0 * 0.05 * k));
    }
    const auto fit = estimate_decay(ts, E, 0.5);
    CHECK(fit.omega_hat == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(fit.fit_quality >= 0.999999);
    CHECK(fit.M_hat == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("constant energy") {
    std::vector<double> ts, E;
    for (int k = 0; k <= 100; ++k) {
      ts.push_back(0.1 * k);
      E.push_back(0.75);
    }
    const auto fit = estimate_decay(ts, E, 0.5);
    CHECK(std::abs(fit.omega_hat) < 1e-12);
    CHECK(fit.fit_quality == doctest::Approx(1.0));
  }
  SUBCASE("an all-zero window is an error") {
    std::vector<double> ts(100), E(100, 0.0);
    for (int k = 0; k < 100; ++k) ts[k] = 0.1 * k;
    CHECK_THROWS_AS(estimate_decay(ts, E, 0.5), std::invalid_argument);
  }
}

TEST_CASE("descent start time") {
  const Multiplier eta = make_multiplier(1.0, 0.0, 1.0);
  CHECK(descent_start_time(eta, 0.25) ==
        doctest::Approx(2.0 * (std::exp(1.0) - 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(descent_start_time(eta, 0.0), std::invalid_argument);
}
