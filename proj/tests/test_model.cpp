#include <doctest.h>

#include "phsim/model.hpp"
#include "phsim/rng.hpp"

using namespace phsim;

namespace {

Matrix wave_P1() {
  Matrix P1(2, 2);
  P1 << 0, 1, 1, 0;
  return P1;
}

Matrix eb_P2() {
  Matrix P2(2, 2);
  P2 << 0, -1, 1, 0;
  return P2;
}

// the wave example's ports: u = (-z2(0), z2(1)), y = (z1(0), z1(1))
ModelDesc wave_desc() {
  ModelDesc d;
  d.order = 1;
  d.dim = 2;
  d.P = {Matrix::Zero(2, 2), wave_P1()};
  d.H = Hamiltonian::constant(Matrix::Identity(2, 2));
  Matrix NB = Matrix::Zero(2, 4), NC = Matrix::Zero(2, 4);
  NB(0, 3) = -1;
  NB(1, 1) = 1;
  NC(0, 2) = 1;
  NC(1, 0) = 1;
  auto [WB, WC] = ports_from_trace_selectors(d.P, 1, 2, NB, NC);
  d.W_B = WB;
  d.W_C = WC;
  return d;
}

ModelDesc eb_desc() {
  ModelDesc d;
  d.order = 2;
  d.dim = 2;
  d.P = {Matrix::Zero(2, 2), Matrix::Zero(2, 2), eb_P2()};
  d.H = Hamiltonian::constant(Matrix::Identity(2, 2));
  Matrix NB = Matrix::Zero(4, 8), NC = Matrix::Zero(4, 8);
  NB(0, 4) = 1;
  NB(1, 6) = 1;
  NB(2, 3) = -1;
  NB(3, 1) = 1;
  NC(0, 7) = 1;
  NC(1, 5) = -1;
  NC(2, 0) = 1;
  NC(3, 2) = 1;
  auto [WB, WC] = ports_from_trace_selectors(d.P, 2, 2, NB, NC);
  d.W_B = WB;
  d.W_C = WC;
  return d;
}

}  // namespace

TEST_CASE("wave and Euler-Bernoulli descriptions build") {
  CHECK_NOTHROW(build_model(wave_desc()));
  CHECK_NOTHROW(build_model(eb_desc()));
}

TEST_CASE("skew P1 at order 1 is rejected as a symmetry violation") {
  ModelDesc d = wave_desc();
  d.P[1] << 0, 1, -1, 0;
  try {
    build_model(d);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(e.has(ModelDefect::SymmetryViolation));
  }
}

TEST_CASE("remaining invariants carry distinct defects") {
  {
    ModelDesc d = wave_desc();
    d.P[0] = Matrix::Identity(2, 2);  // Re P0 > 0
    try {
      build_model(d);
      FAIL("expected ModelError");
    } catch (const ModelError& e) {
      CHECK(e.has(ModelDefect::IndefiniteP0));
    }
  }
  {
    ModelDesc d = wave_desc();
    d.H = Hamiltonian::constant(Matrix(-Matrix::Identity(2, 2)));
    try {
      build_model(d);
      FAIL("expected ModelError");
    } catch (const ModelError& e) {
      CHECK(e.has(ModelDefect::NonCoerciveH));
    }
  }
  {
    ModelDesc d = wave_desc();
    d.P[1] = Matrix::Zero(2, 2);
    try {
      build_model(d);
      FAIL("expected ModelError");
    } catch (const ModelError& e) {
      CHECK(e.has(ModelDefect::SingularPN));
    }
  }
  {
    ModelDesc d = wave_desc();
    const PhsModel m = build_model(d);
    d.W_C = d.W_B * m.swap();  // W_C S = W_B: stacked port map singular
    try {
      build_model(d);
      FAIL("expected ModelError");
    } catch (const ModelError& e) {
      CHECK(e.has(ModelDefect::SingularPortStack));
    }
  }
}

TEST_CASE("port transform blocks") {
  const PhsModel wave = build_model(wave_desc());
  auto [Q1, R1] = port_transform(wave);
  CHECK(spectral_norm(Matrix(Q1 - wave_P1())) == 0.0);  // N = 1: Q = P1

  const PhsModel eb = build_model(eb_desc());
  auto [Q2, R2] = port_transform(eb);
  Matrix expect = Matrix::Zero(4, 4);
  expect.block(0, 2, 2, 2) = eb_P2();
  expect.block(2, 0, 2, 2) = -eb_P2();
  CHECK(spectral_norm(Matrix(Q2 - expect)) == 0.0);  // N = 2, P1 = 0 block pattern

  // wave: R_ext R_ext^T = I by direct multiplication (P1 P1^T = I here)
  CHECK(spectral_norm(Matrix(R1 * R1.transpose() - Matrix::Identity(4, 4))) < 1e-14);
}

TEST_CASE("extract_ports on the wave model") {
  const PhsModel m = build_model(wave_desc());
  SUBCASE("zero trace gives zero ports") {
    const PortVector p = m.extract_ports(Vector::Zero(4));
    CHECK(p.f.norm() == 0.0);
    CHECK(p.e.norm() == 0.0);
    CHECK(p.u.norm() == 0.0);
    CHECK(p.y.norm() == 0.0);
  }
  SUBCASE("hand-evaluated trace (Hx)(1) = (1,0), (Hx)(0) = (0,0)") {
    Vector trace(4);
    trace << 1, 0, 0, 0;
    const PortVector p = m.extract_ports(trace);
    const double isq = 1.0 / std::sqrt(2.0);
    CHECK(p.f(0) == doctest::Approx(0.0));
    CHECK(p.f(1) == doctest::Approx(isq));
    CHECK(p.e(0) == doctest::Approx(isq));
    CHECK(p.e(1) == doctest::Approx(0.0));
  }
  SUBCASE("the example wiring gives u = (-b2, a2), y = (b1, a1)") {
    CounterRng rng(31, "model");
    const Vector a = rng.normal_vec(2), b = rng.normal_vec(2);
    Vector trace(4);
    trace << a, b;
    const PortVector p = m.extract_ports(trace);
    CHECK(p.u(0) == doctest::Approx(-b(1)).epsilon(1e-13));
    CHECK(p.u(1) == doctest::Approx(a(1)).epsilon(1e-13));
    CHECK(p.y(0) == doctest::Approx(b(0)).epsilon(1e-13));
    CHECK(p.y(1) == doctest::Approx(a(0)).epsilon(1e-13));
  }
}

TEST_CASE("extract_ports is linear and the trace is recoverable") {
  const PhsModel m = build_model(eb_desc());
  CounterRng rng(32, "model");
  const Vector t1 = rng.normal_vec(8), t2 = rng.normal_vec(8);
  const double a = rng.uniform(-2, 2);
  const PortVector p1 = m.extract_ports(t1);
  const PortVector p2 = m.extract_ports(t2);
  const PortVector ps = m.extract_ports(Vector(a * t1 + t2));
  CHECK((ps.u - a * p1.u - p2.u).norm() < 1e-12);
  CHECK((ps.y - a * p1.y - p2.y).norm() < 1e-12);
  CHECK((ps.f - a * p1.f - p2.f).norm() < 1e-12);

  const Vector back = m.trace_from_flows(p1.f, p1.e);
  CHECK((back - t1).norm() < 1e-12 * (1.0 + t1.norm()));
}

TEST_CASE("sample_passivity holds with equality for the P0 = 0 wave") {
  const PhsModel m = build_model(wave_desc());
  const auto rep = sample_passivity(m, 50, 7);
  CHECK(rep.ok);
  CHECK(std::abs(rep.worst_margin) <= 1e-8 * rep.scale);
}

TEST_CASE("sample_passivity flags a sign flip on one output port") {
  ModelDesc d = wave_desc();
  d.W_C.row(1) *= -1.0;
  const PhsModel m = build_model(d);
  const auto rep = sample_passivity(m, 50, 7);
  CHECK_FALSE(rep.ok);
  CHECK(rep.worst_margin > 1e-6);
}

TEST_CASE("sample_passivity accepts the Euler-Bernoulli wiring with equality") {
  const PhsModel m = build_model(eb_desc());
  const auto rep = sample_passivity(m, 40, 9);
  CHECK(rep.ok);
  CHECK(std::abs(rep.worst_margin) <= 1e-8 * rep.scale);  // P0 = 0: equality case
}

TEST_CASE("Hamiltonian kinds evaluate and audit") {
  const auto table = Hamiltonian::table(
      {Matrix::Identity(2, 2), Matrix(2.0 * Matrix::Identity(2, 2))});
  CHECK(table.eval(0.5)(0, 0) == doctest::Approx(1.5));
  CHECK(table.deriv(0.25)(1, 1) == doctest::Approx(1.0));
  CHECK(table.coercivity_floor() == doctest::Approx(1.0));

  const auto prof = Hamiltonian::diag_profiles(
      {ScalarProfile::exponential(1.0, -0.5), ScalarProfile::constant(2.0)});
  CHECK(prof.eval(1.0)(0, 0) == doctest::Approx(std::exp(-0.5)));
  CHECK(prof.deriv(0.0)(0, 0) == doctest::Approx(-0.5));
  CHECK(prof.coercivity_floor() == doctest::Approx(std::exp(-0.5)));
}
