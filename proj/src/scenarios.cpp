#include "phsim/scenarios.hpp"

#include <cmath>
#include <complex>
#include <set>

#include <nlohmann/json.hpp>

#include "phsim/rng.hpp"

namespace phsim {
namespace {

using nlohmann::json;

// C^2 bump (1 - t^2)^3 on |t| < 1; zero value and first two derivatives at the
// support edge, so boundary traces vanish when the support stays inside (0,1).
double bump(double zeta, double center, double width) {
  const double t = (zeta - center) / width;
  if (std::abs(t) >= 1.0) return 0.0;
  const double s = 1.0 - t * t;
  return s * s * s;
}

struct Defaults {
  int n_cells = 64;
  double dt = 1.0 / 64;
  double T = 10.0;
  Stepper stepper = Stepper::BackwardEuler;
  double dissipation = 0.0;
  double kappa = 2.0;
  double level = 1.0;
  double amplitude = 1.0;
  std::string left_bc = "dirichlet";
  std::string init = "bump";
  SolverOptions solver;
};

struct OverrideReader {
  explicit OverrideReader(const json& j) : ov(j) {
    if (!ov.is_object() && !ov.is_null())
      throw InvalidOverrideError("overrides must be a JSON object");
  }
  double num(const char* key, double dflt) {
    if (!ov.contains(key)) return dflt;
    used.insert(key);
    if (!ov.at(key).is_number()) throw InvalidOverrideError(std::string(key) + ": number expected");
    return ov.at(key).get<double>();
  }
  int integer(const char* key, int dflt) {
    if (!ov.contains(key)) return dflt;
    used.insert(key);
    if (!ov.at(key).is_number_integer())
      throw InvalidOverrideError(std::string(key) + ": integer expected");
    return ov.at(key).get<int>();
  }
  std::string str(const char* key, const std::string& dflt) {
    if (!ov.contains(key)) return dflt;
    used.insert(key);
    if (!ov.at(key).is_string()) throw InvalidOverrideError(std::string(key) + ": string expected");
    return ov.at(key).get<std::string>();
  }
  void finish() const {
    if (ov.is_null()) return;
    for (auto it = ov.begin(); it != ov.end(); ++it)
      if (!used.count(it.key())) throw InvalidOverrideError("unknown override: " + it.key());
  }
  const json& ov;
  std::set<std::string> used;
};

Defaults read_common(OverrideReader& r, Defaults d) {
  d.n_cells = r.integer("n_cells", d.n_cells);
  d.dt = r.num("dt", d.dt);
  d.T = r.num("T", d.T);
  d.dissipation = r.num("dissipation", d.dissipation);
  d.amplitude = r.num("amplitude", d.amplitude);
  d.solver.tolerance = r.num("tolerance", d.solver.tolerance);
  d.solver.max_iterations = r.integer("max_iterations", d.solver.max_iterations);
  const std::string st = r.str("stepper", d.stepper == Stepper::Midpoint ? "midpoint"
                                                                         : "backward-euler");
  if (st == "midpoint")
    d.stepper = Stepper::Midpoint;
  else if (st == "backward-euler")
    d.stepper = Stepper::BackwardEuler;
  else
    throw InvalidOverrideError("stepper must be 'midpoint' or 'backward-euler'");
  if (d.dt <= 0.0) throw InvalidOverrideError("dt must be > 0");
  if (d.T <= 0.0) throw InvalidOverrideError("T must be > 0");
  if (d.n_cells < 8) throw InvalidOverrideError("n_cells too small");
  return d;
}

// ---- wave family: d = 2, N = 1, P1 = [[0,1],[1,0]], P0 = 0, H = I ----

std::shared_ptr<const PhsModel> wave_model(const std::string& left_bc) {
  ModelDesc desc;
  desc.order = 1;
  desc.dim = 2;
  desc.P = {Matrix::Zero(2, 2), (Matrix(2, 2) << 0, 1, 1, 0).finished()};
  desc.H = Hamiltonian::constant(Matrix::Identity(2, 2));
  // trace stack (z1(1), z2(1), z1(0), z2(0))
  Matrix NB = Matrix::Zero(2, 4), NC = Matrix::Zero(2, 4);
  if (left_bc == "dirichlet") {
    // exchange the first components of B and C relative to the Neumann wiring
    NB(0, 2) = 1;   // z1(0)
    NB(1, 1) = 1;   // z2(1)
    NC(0, 3) = -1;  // -z2(0)
    NC(1, 0) = 1;   // z1(1)
  } else {
    NB(0, 3) = -1;  // -z2(0)
    NB(1, 1) = 1;   // z2(1)
    NC(0, 2) = 1;   // z1(0)
    NC(1, 0) = 1;   // z1(1)
  }
  auto [WB, WC] = ports_from_trace_selectors(desc.P, 1, 2, NB, NC);
  desc.W_B = WB;
  desc.W_C = WC;
  return std::make_shared<PhsModel>(build_model(desc));
}

Vector wave_bump_init(int n_cells, double amplitude, CounterRng rng) {
  const int m = n_cells + 1;
  Vector x = Vector::Zero(2 * m);
  const double c1 = rng.uniform(0.4, 0.6), w1 = rng.uniform(0.25, 0.35);
  const double c2 = rng.uniform(0.4, 0.6), w2 = rng.uniform(0.2, 0.3);
  const double a2 = rng.uniform(-0.5, 0.5);
  for (int j = 0; j < m; ++j) {
    const double z = static_cast<double>(j) / n_cells;
    x(2 * j) = amplitude * bump(z, c1, w1);
    x(2 * j + 1) = amplitude * a2 * bump(z, c2, w2);
  }
  return x;
}

// Real part of the slowest kappa-matched decaying eigenmode of the damped wave.
Vector wave_mode_init(int n_cells, double amplitude, double kappa) {
  const int m = n_cells + 1;
  Vector x = Vector::Zero(2 * m);
  const std::complex<double> lam(0.5 * std::log((kappa - 1.0) / (kappa + 1.0)),
                                 0.5 * 3.14159265358979323846);
  for (int j = 0; j < m; ++j) {
    const double z = static_cast<double>(j) / n_cells;
    x(2 * j) = amplitude * std::sinh(lam * z).real();
    x(2 * j + 1) = amplitude * std::cosh(lam * z).real();
  }
  return x;
}

MonotoneMap left_map(const std::string& left_bc, double relay_level) {
  if (left_bc == "dirichlet" || left_bc == "neumann") return MonotoneMap::zero(1);
  if (left_bc == "relay") return MonotoneMap::relay(1, relay_level);
  throw InvalidOverrideError("left_bc must be dirichlet, neumann or relay");
}

Instantiated make_wave(const std::string& damper_kind, const json& overrides,
                       std::uint64_t seed, Defaults d) {
  OverrideReader r(overrides);
  d = read_common(r, d);
  d.kappa = r.num("kappa", d.kappa);
  d.level = r.num("level", d.level);
  d.left_bc = r.str("left_bc", d.left_bc);
  const std::string init = r.str("init", d.init);
  r.finish();

  Instantiated inst;
  inst.model = wave_model(d.left_bc);
  auto sys = std::make_shared<DiscreteSystem>(
      build_discrete(inst.model, d.n_cells, d.dissipation));

  MonotoneMap damper = MonotoneMap::zero(1);
  if (damper_kind == "sector") {
    if (d.kappa <= 0) throw InvalidOverrideError("kappa must be > 0");
    damper = MonotoneMap::linear(Matrix::Constant(1, 1, d.kappa));
    inst.kappa = d.kappa;
  } else if (damper_kind == "relay") {
    damper = MonotoneMap::relay(1, d.level);
  } else if (damper_kind == "saturation") {
    damper = MonotoneMap::saturation(1, 1.0, d.level);
  }  // "none": conservative
  inst.damper = damper;

  inst.loop.system = sys;
  inst.loop.static_feedback = MonotoneMap::blocks({left_map(d.left_bc, 0.5), damper});
  inst.loop.stepper = d.stepper;
  inst.loop.dt = d.dt;
  inst.loop.T = d.T;
  inst.loop.solver = d.solver;

  if (init == "decay-mode" && d.kappa > 1.0 && damper_kind == "sector")
    inst.x0 = wave_mode_init(d.n_cells, d.amplitude, d.kappa);
  else
    inst.x0 = wave_bump_init(d.n_cells, d.amplitude, CounterRng(seed, "wave-init"));
  inst.profile = QProfile::N1;
  inst.port_use.Pi_out = Matrix::Identity(2, 2);
  return inst;
}

// ---- Euler-Bernoulli family: d = 2, N = 2, P2 = [[0,-1],[1,0]] ----

std::shared_ptr<const PhsModel> eb_model(const Matrix& P0, const Hamiltonian& H) {
  ModelDesc desc;
  desc.order = 2;
  desc.dim = 2;
  desc.P = {P0, Matrix::Zero(2, 2), (Matrix(2, 2) << 0, -1, 1, 0).finished()};
  desc.H = H;
  // trace stack (z(1), z'(1), z(0), z'(0)) with z = (H1 x1, H2 x2)
  // clamped-left / actuated-right wiring:
  //   u = ( z1(0), z1'(0), -z2'(1), z2(1) ),  y = ( z2'(0), -z2(0), z1(1), z1'(1) )
  Matrix NB = Matrix::Zero(4, 8), NC = Matrix::Zero(4, 8);
  NB(0, 4) = 1;
  NB(1, 6) = 1;
  NB(2, 3) = -1;
  NB(3, 1) = 1;
  NC(0, 7) = 1;
  NC(1, 5) = -1;
  NC(2, 0) = 1;
  NC(3, 2) = 1;
  auto [WB, WC] = ports_from_trace_selectors(desc.P, 2, 2, NB, NC);
  desc.W_B = WB;
  desc.W_C = WC;
  return std::make_shared<PhsModel>(build_model(desc));
}

Vector eb_bump_init(int n_cells, double amplitude, CounterRng rng) {
  const int m = n_cells + 1;
  Vector x = Vector::Zero(2 * m);
  const double c1 = rng.uniform(0.45, 0.55), w1 = rng.uniform(0.3, 0.4);
  const double a2 = rng.uniform(0.3, 0.7);
  for (int j = 0; j < m; ++j) {
    const double z = static_cast<double>(j) / n_cells;
    x(2 * j) = amplitude * bump(z, c1, w1);
    x(2 * j + 1) = amplitude * a2 * bump(z, 0.55, 0.35);
  }
  return x;
}

Instantiated make_eb(bool with_controller, const Matrix& P0, const json& overrides,
                     std::uint64_t seed, Defaults d) {
  OverrideReader r(overrides);
  d = read_common(r, d);
  d.level = r.num("level", d.level);
  r.finish();

  Instantiated inst;
  inst.model = eb_model(P0, Hamiltonian::constant(Matrix::Identity(2, 2)));
  auto sys = std::make_shared<DiscreteSystem>(
      build_discrete(inst.model, d.n_cells, d.dissipation));
  inst.loop.system = sys;
  inst.loop.stepper = d.stepper;
  inst.loop.dt = d.dt;
  inst.loop.T = d.T;
  inst.loop.solver = d.solver;
  inst.x0 = eb_bump_init(d.n_cells, d.amplitude, CounterRng(seed, "eb-init"));
  inst.profile = QProfile::EB;
  inst.port_use.Pi_out = Matrix::Identity(4, 4);

  if (with_controller) {
    Controller ctrl = Controller::collocated(
        MonotoneMap::linear(Matrix::Identity(4, 4)), Matrix::Identity(4, 4),
        MonotoneMap::linear(Matrix::Identity(4, 4)), Matrix::Identity(4, 4),
        Matrix::Identity(4, 4));
    inst.loop.controller = ctrl;
    inst.xc0 = Vector::Zero(4);
  } else {
    const Matrix gain = Matrix::Constant(1, 1, d.level);
    inst.loop.static_feedback = MonotoneMap::blocks(
        {MonotoneMap::zero(1), MonotoneMap::zero(1), MonotoneMap::linear(gain),
         MonotoneMap::linear(gain)});
  }
  return inst;
}

// ---- scalar transport toy: d = 1, N = 1, P1 = 1, H = 1 ----

Instantiated make_transport(const json& overrides, std::uint64_t seed, Defaults d) {
  OverrideReader r(overrides);
  d = read_common(r, d);
  d.level = r.num("level", d.level);
  r.finish();

  ModelDesc desc;
  desc.order = 1;
  desc.dim = 1;
  desc.P = {Matrix::Zero(1, 1), Matrix::Identity(1, 1)};
  desc.H = Hamiltonian::constant(Matrix::Identity(1, 1));
  Matrix NB = Matrix::Zero(1, 2), NC = Matrix::Zero(1, 2);
  const double isq = 1.0 / std::sqrt(2.0);
  NB(0, 0) = isq;   // u = f = (z(1) - z(0))/sqrt(2)
  NB(0, 1) = -isq;
  NC(0, 0) = isq;   // y = e = (z(1) + z(0))/sqrt(2)
  NC(0, 1) = isq;
  auto [WB, WC] = ports_from_trace_selectors(desc.P, 1, 1, NB, NC);
  desc.W_B = WB;
  desc.W_C = WC;

  Instantiated inst;
  inst.model = std::make_shared<PhsModel>(build_model(desc));
  auto sys = std::make_shared<DiscreteSystem>(
      build_discrete(inst.model, d.n_cells, d.dissipation));
  inst.loop.system = sys;
  inst.loop.static_feedback = MonotoneMap::relay(1, d.level);
  inst.loop.stepper = d.stepper;
  inst.loop.dt = d.dt;
  inst.loop.T = d.T;
  inst.loop.solver = d.solver;

  CounterRng rng(seed, "transport-init");
  const int m = d.n_cells + 1;
  Vector x = Vector::Zero(m);
  const double c = rng.uniform(0.4, 0.6);
  for (int j = 0; j < m; ++j)
    x(j) = d.amplitude * bump(static_cast<double>(j) / d.n_cells, c, 0.3);
  inst.x0 = x;
  inst.profile = QProfile::N1;
  inst.port_use.Pi_out = Matrix::Identity(1, 1);
  return inst;
}

}  // namespace

std::vector<ScenarioInfo> list_scenarios() {
  return {
      {"wave-sector-damper",
       "wave equation, Dirichlet left end, kappa-sector damper at the right end",
       "exponential-decay"},
      {"wave-relay-damper",
       "wave equation with a multi-valued relay (dry friction) damper at the right end",
       "asymptotic-only"},
      {"wave-neumann-conservative",
       "wave equation with zero force at both ends; energy preserving",
       "conservative"},
      {"wave-saturating-damper",
       "wave equation with a saturating damper: sector bound holds only near 0",
       "asymptotic-only"},
      {"transport-relay-toy",
       "scalar port toy with relay feedback; exercises the 1-D inclusion path",
       "asymptotic-only"},
      {"eb-beam-damper",
       "Euler-Bernoulli beam, clamped left end, shear/moment dampers at the right end",
       "exponential-decay"},
      {"eb-beam-collocated",
       "Euler-Bernoulli beam with the collocated dynamic controller (A_c = -I, B_c = I, "
       "D_c = identity, Pi = I)",
       "exponential-decay"},
      {"order2-bulk-damped",
       "order-2 system with P0 = -0.1 I bulk damping and boundary dampers",
       "exponential-decay"},
  };
}

Instantiated instantiate(const std::string& name, const nlohmann::json& overrides,
                         std::uint64_t seed) {
  Defaults d;
  Instantiated inst;
  if (name == "wave-sector-damper") {
    d.n_cells = 128;
    d.dt = 1.0 / 256;
    d.T = 20.0;
    d.stepper = Stepper::BackwardEuler;
    d.dissipation = 0.02;
    d.init = "decay-mode";
    inst = make_wave("sector", overrides, seed, d);
    inst.tag = "exponential-decay";
  } else if (name == "wave-relay-damper") {
    d.n_cells = 64;
    d.dt = 1.0 / 64;
    d.T = 16.0;
    d.stepper = Stepper::BackwardEuler;
    inst = make_wave("relay", overrides, seed, d);
    inst.tag = "asymptotic-only";
  } else if (name == "wave-neumann-conservative") {
    d.n_cells = 128;
    d.dt = 1.0 / 128;
    d.T = 10.0;
    d.stepper = Stepper::Midpoint;
    d.left_bc = "neumann";
    inst = make_wave("none", overrides, seed, d);
    inst.tag = "conservative";
  } else if (name == "wave-saturating-damper") {
    d.n_cells = 64;
    d.dt = 1.0 / 32;
    d.T = 24.0;
    d.stepper = Stepper::Midpoint;
    d.amplitude = 2.0;
    inst = make_wave("saturation", overrides, seed, d);
    inst.tag = "asymptotic-only";
  } else if (name == "transport-relay-toy") {
    d.n_cells = 64;
    d.dt = 1.0 / 64;
    d.T = 8.0;
    d.level = 0.5;
    inst = make_transport(overrides, seed, d);
    inst.tag = "asymptotic-only";
  } else if (name == "eb-beam-damper") {
    d.n_cells = 64;
    d.dt = 1.0 / 128;
    d.T = 10.0;
    d.stepper = Stepper::BackwardEuler;
    d.dissipation = 0.02;
    inst = make_eb(false, Matrix::Zero(2, 2), overrides, seed, d);
    inst.tag = "exponential-decay";
  } else if (name == "eb-beam-collocated") {
    d.n_cells = 48;
    d.dt = 1.0 / 96;
    d.T = 10.0;
    d.stepper = Stepper::BackwardEuler;
    d.dissipation = 0.02;
    inst = make_eb(true, Matrix::Zero(2, 2), overrides, seed, d);
    inst.tag = "exponential-decay";
  } else if (name == "order2-bulk-damped") {
    d.n_cells = 64;
    d.dt = 1.0 / 128;
    d.T = 10.0;
    d.stepper = Stepper::BackwardEuler;
    d.dissipation = 0.02;
    inst = make_eb(false, -0.1 * Matrix::Identity(2, 2), overrides, seed, d);
    inst.tag = "exponential-decay";
    inst.profile = QProfile::N2;
  } else {
    throw UnknownScenarioError("unknown scenario: " + name);
  }
  return inst;
}

}  // namespace phsim
