#pragma once

#include "phsim/discrete.hpp"
#include "phsim/simulate.hpp"

namespace phsim {

/// Interior multiplier eta(zeta) for the Lyapunov functionals:
/// exponential form s(e^{lambda zeta} - 1) with eta(0) = 0, eta' > 0,
/// or the second-order form 1 - zeta with eta(1) = 0.
struct Multiplier {
  enum class Form { ExpMinusOne, OneMinusZeta };
  Form form = Form::ExpMinusOne;
  double scale = 1.0;
  double lambda = 1.0;
  double alpha = 1.0, beta = 0.0, gamma = 0.0;  // target constants
  double margin = 0.0;                          // audit-grid min of alpha*eta' - beta*eta - gamma

  double eval(double z) const;
  double deriv(double z) const;
  double at_one() const { return eval(1.0); }

  static Multiplier one_minus_zeta();
};

/// eta = s(e^{lambda zeta} - 1) with alpha*eta' - beta*eta >= gamma on the audit
/// grid; lambda starts at the proof bound gamma/alpha and doubles until the
/// grid check passes.
Multiplier make_multiplier(double alpha, double beta, double gamma, int audit_points = 1025);

/// Multiplier for the order-1 descent functional from the model's coefficient
/// bounds (alpha = min eig H^{-1}, beta = M1 + 2 M3, gamma = max eig H^{-1}).
Multiplier descent_multiplier(const PhsModel& model, int audit_points = 1025);

enum class QProfile { N1, N2, EB };

struct QEval {
  double value = 0.0;
  double c_hat = 0.0;  // |q(x)| <= c_hat ||x||_h^2
};

/// Lyapunov functional q(x) on the grid: trapezoid quadrature with running
/// integrals for the order-2 / Euler-Bernoulli forms.
QEval lyapunov_q(const DiscreteSystem& sys, QProfile profile, const Multiplier& eta,
                 const Vector& x);

struct ConditionReport {
  std::string name;
  double lhs = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::vector<std::pair<std::string, double>> terms;
};

/// Order-2 smallness condition: sum of the three coefficient norms < 2.
ConditionReport check_order2_condition(const PhsModel& model, int audit_points = 1025);

/// Euler-Bernoulli condition: sup{||H2' H2^{-1}||, ||H1' H1^{-1}||} < 1.
/// Requires the block structure (d even, H block diagonal, P2 off-diagonal,
/// P1 = P0 = 0).
ConditionReport check_eb_condition(const PhsModel& model, int audit_points = 1025);

bool is_eb_structured(const PhsModel& model, int audit_points = 257);

/// Which port components actually enter the stabilization estimate: an output
/// projection Pi (as in the controller assumptions) and an optional input mask.
struct PortUse {
  Matrix Pi_out;
  std::optional<Matrix> Pi_in;
};

/// Boundary trace bound |trace-combination|^2 <= c (|B x|^2 + |Pi C x|^2) as a
/// generalized eigenvalue problem between quadratic forms on the 2Nd trace
/// space. lhs is the smallest certificate c, infinite when the port form has a
/// kernel meeting the trace combination.
ConditionReport check_boundary_bound(const PhsModel& model, const PortUse& use,
                                     QProfile profile);

struct DecayFit {
  double M_hat = 0.0;
  double omega_hat = 0.0;
  double fit_quality = 0.0;
};

/// Least-squares line through (t, log E) over the trailing window; omega_hat is
/// half the slope. Throws std::invalid_argument when the window has no usable
/// samples.
DecayFit estimate_decay(const EnergyTrace& trace, double window_fraction = 0.5);
DecayFit estimate_decay(const std::vector<double>& times, const std::vector<double>& energy,
                        double window_fraction = 0.5);

/// Descent start time t0 = eta(1) / (2 kappa_tilde) for the sector route.
double descent_start_time(const Multiplier& eta, double kappa_tilde);

}  // namespace phsim
