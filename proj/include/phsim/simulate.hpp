#pragma once

#include <optional>

#include "phsim/discrete.hpp"
#include "phsim/monotone.hpp"

namespace phsim {

class NonconvergenceError : public std::runtime_error {
public:
  NonconvergenceError(const std::string& msg, std::vector<double> history)
      : std::runtime_error(msg), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return history_; }

private:
  std::vector<double> history_;
};

/// Finite-dimensional dissipative controller in collocated form:
///   dx_c/dt in -drift(x_c) + B_c u_c,   y_c = C_c x_c + D_c(u_c),
/// with C_c = B_c^T enforced and an orthogonal projection Pi plus an SPD
/// weight for the equivalent inner product used by the verification items.
struct Controller {
  int n_c = 0;
  MonotoneMap drift = MonotoneMap::zero(0);  // Lambda with A_c = -Lambda
  Matrix B_c, C_c;
  MonotoneMap D_c = MonotoneMap::zero(0);
  Matrix Pi;
  Matrix weight;

  static Controller collocated(MonotoneMap drift, Matrix B_c, MonotoneMap D_c,
                               Matrix Pi, Matrix weight);
  void validate() const;  // throws std::invalid_argument on a broken invariant
};

enum class Stepper { BackwardEuler, Midpoint };

struct SolverOptions {
  double tolerance = 1e-12;   // absolute inclusion residual
  int max_iterations = 10000;
};

struct ClosedLoop {
  std::shared_ptr<const DiscreteSystem> system;
  std::optional<MonotoneMap> static_feedback;  // exactly one of these two is set
  std::optional<Controller> controller;
  Stepper stepper = Stepper::Midpoint;
  double dt = 0.0;
  double T = 0.0;
  SolverOptions solver;
};

struct PortSolution {
  Vector y, u, x;
  int iterations = 0;
  double residual = 0.0;  // graph distance of (y, -u) to phi
};

/// Solves the boundary monotone inclusion G^{-1} y + phi(y) ∋ G^{-1} F f by
/// forward-backward iteration with the maps' constant step, then recovers
/// u = G^{-1}(y - F f) and x = Phi f + Psi u.
PortSolution solve_port_inclusion(const DiscreteIoMaps& maps, const MonotoneMap& phi,
                                  const Vector& f, const SolverOptions& opt = {},
                                  const Vector* warm_start = nullptr);

struct EnergyTrace {
  int port_dim = 0;
  bool dynamic = false;
  std::vector<double> times;
  std::vector<double> E_state;        // 0.5 ||x||_h^2
  std::vector<double> E_ctrl;         // 0.5 <x_c, W x_c>
  std::vector<double> power_residual;
  std::vector<double> diffquot_norm;  // ||x_{n+1} - x_n|| / dt, product norm
  std::vector<Vector> u, y, y_c;
  long total_inner_iterations = 0;
  int max_inner_iterations = 0;
  double max_graph_residual = 0.0;
  std::size_t size() const { return times.size(); }
};

struct StepOutput {
  Vector x, x_c;
  Vector u, y, y_c;
  double power_residual = 0.0;
  double diffquot_norm = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

/// Holds the factorized io maps for a closed loop and advances it one step at
/// a time. A run is deterministic; warm starts only affect iteration counts.
class LoopRunner {
public:
  explicit LoopRunner(ClosedLoop loop);

  const ClosedLoop& config() const { return loop_; }
  const DiscreteIoMaps& maps() const { return maps_; }
  int steps() const { return static_cast<int>(std::lround(loop_.T / loop_.dt)); }

  StepOutput step(const Vector& x, const Vector& x_c);
  EnergyTrace run(const Vector& x0, const Vector& xc0);

  void reset_warm_start() { warm_.reset(); }

private:
  StepOutput step_static(const Vector& x);
  StepOutput step_dynamic(const Vector& x, const Vector& x_c);

  ClosedLoop loop_;
  double tau_;
  DiscreteIoMaps maps_;
  std::optional<Vector> warm_;
  double alpha_dyn_ = 0.0;  // FB step for the joint (controller-eliminated) map
  double lip_dyn_ = 0.0;
};

/// Full trajectory from (x0, xc0); xc0 may be empty for static loops.
EnergyTrace run(const ClosedLoop& loop, const Vector& x0, const Vector& xc0 = Vector());

struct ContractionReport {
  int split_levels = 1;    // n with P = Q^n (1 = no splitting needed)
  double rho = 0.0;        // per-stage contraction bound ||Q - I|| ||Q^{-1}||
  int base_solves = 0;
  bool split_used = false;
};

/// Resolvent (I - tau*A)^{-1} f of the weighted closed loop computed through
/// the H = I resolvent and the nodal multiplication P = H, nesting the
/// fixed-point iteration through P^{1/n} when ||P - I|| >= 1/2. Verified
/// alternative to the production weighted solve.
Vector contraction_resolve(const DiscreteSystem& sys, const MonotoneMap& phi, double tau,
                           const Vector& f, const SolverOptions& opt = {},
                           ContractionReport* report = nullptr);

struct ControllerReport {
  bool ok = true;
  bool dissipation_ok = true;   // item (i)
  bool output_bound_ok = true;  // item (ii)
  bool l2_gain_ok = true;       // item (iii)
  double rho_hat = 0.0;
  double c_prime_hat = 0.0;
  double delta_hat = 0.0;
  double c_hat = 0.0;
  double t0 = 0.0;
  std::string violation;
};

/// Samples the three controller conditions and reports estimated constants.
/// Estimates, not certificates: item (iii) is fitted from simulation.
ControllerReport verify_controller(const Controller& ctrl, int trials, double horizon,
                                   std::uint64_t seed);

}  // namespace phsim
