#include "phsim/simulate.hpp"

#include <cmath>
#include <functional>

#include "phsim/rng.hpp"

namespace phsim {

Controller Controller::collocated(MonotoneMap drift, Matrix B_c, MonotoneMap D_c,
                                  Matrix Pi, Matrix weight) {
  Controller c;
  c.n_c = drift.dim();
  c.drift = std::move(drift);
  c.C_c = B_c.transpose();
  c.B_c = std::move(B_c);
  c.D_c = std::move(D_c);
  c.Pi = std::move(Pi);
  c.weight = std::move(weight);
  c.validate();
  return c;
}

void Controller::validate() const {
  const int Nd = static_cast<int>(B_c.cols());
  if (B_c.rows() != n_c || C_c.rows() != Nd || C_c.cols() != n_c)
    throw std::invalid_argument("controller: B_c / C_c dimensions inconsistent");
  if (D_c.dim() != Nd) throw std::invalid_argument("controller: D_c dimension != Nd");
  if (drift.dim() != n_c) throw std::invalid_argument("controller: drift dimension != n_c");
  const double scale = std::max(1.0, spectral_norm(B_c));
  if (spectral_norm(Matrix(C_c - B_c.transpose())) > 1e-12 * scale)
    throw std::invalid_argument("controller: C_c is not the adjoint of B_c");
  if (Pi.rows() != Nd || Pi.cols() != Nd)
    throw std::invalid_argument("controller: Pi must be Nd x Nd");
  if (spectral_norm(Matrix(Pi * Pi - Pi)) > 1e-12 ||
      spectral_norm(Matrix(Pi - Pi.transpose())) > 1e-12)
    throw std::invalid_argument("controller: Pi is not an orthogonal projection");
  if (weight.rows() != n_c || weight.cols() != n_c ||
      sym_part_bounds(weight).first <= 0.0 ||
      spectral_norm(Matrix(weight - weight.transpose())) > 1e-12)
    throw std::invalid_argument("controller: weight must be SPD");
  if (n_c > 0 && drift.resolve(1.0, Vector::Zero(n_c)).norm() != 0.0)
    throw std::invalid_argument("controller: drift must satisfy 0 in A_c(0)");
  if (D_c.resolve(1.0, Vector::Zero(Nd)).norm() != 0.0)
    throw std::invalid_argument("controller: D_c must satisfy 0 in D_c(0)");
}

PortSolution solve_port_inclusion(const DiscreteIoMaps& maps, const MonotoneMap& phi,
                                  const Vector& f, const SolverOptions& opt,
                                  const Vector* warm_start) {
  const int Nd = static_cast<int>(maps.G().rows());
  if (phi.dim() != Nd) throw DimensionError("solve_port_inclusion: phi dimension != Nd");
  const Matrix& B = maps.G_inv();
  const Vector x0 = maps.apply_Phi(f);
  const Vector Ff = maps.system().output_op() * x0;
  const Vector c0 = B * Ff;
  const double alpha = maps.fb_step();
  const double lip = maps.G_inv_norm();
  const double stop_scale = 1.0 / alpha + lip;

  Vector y = warm_start ? *warm_start : Vector(Ff);
  std::vector<double> history;
  int it = 0;
  bool converged = false;
  for (; it < opt.max_iterations; ++it) {
    const Vector ynew = phi.resolve(alpha, y - alpha * (B * y - c0));
    const double change = (ynew - y).norm();
    history.push_back(change * stop_scale);
    y = ynew;
    if (change * stop_scale <= opt.tolerance * (1.0 + y.norm())) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged)
    throw NonconvergenceError(
        "solve_port_inclusion: iteration cap " + std::to_string(opt.max_iterations) +
            " hit (fb factor " + std::to_string(maps.fb_factor()) + ")",
        std::move(history));

  PortSolution sol;
  sol.y = y;
  sol.u = B * (y - Ff);
  sol.x = x0 + maps.Psi() * sol.u;
  sol.iterations = it;
  sol.residual = phi.graph_distance(y, -sol.u);
  return sol;
}

LoopRunner::LoopRunner(ClosedLoop loop)
    : loop_(std::move(loop)),
      tau_(loop_.stepper == Stepper::BackwardEuler ? loop_.dt : 0.5 * loop_.dt),
      maps_(loop_.system, tau_) {
  if (loop_.dt <= 0.0) throw std::invalid_argument("closed loop: dt must be > 0");
  if (loop_.T < 0.0) throw std::invalid_argument("closed loop: T must be >= 0");
  if (loop_.solver.tolerance <= 0.0)
    throw std::invalid_argument("closed loop: solver tolerance must be > 0");
  const bool has_static = loop_.static_feedback.has_value();
  const bool has_ctrl = loop_.controller.has_value();
  if (has_static == has_ctrl)
    throw std::invalid_argument("closed loop: exactly one of static feedback / controller");
  const int Nd = loop_.system->model().port_dim();
  if (has_static && loop_.static_feedback->dim() != Nd)
    throw std::invalid_argument("closed loop: feedback dimension != Nd");
  if (has_ctrl) {
    loop_.controller->validate();
    if (loop_.controller->B_c.cols() != Nd)
      throw std::invalid_argument("closed loop: controller port dimension != Nd");
    // FB step for the controller-eliminated map: scan the contraction bound
    // ||I - a G^{-1}|| + a tau ||C_c|| ||B_c||
    const Matrix& B = maps_.G_inv();
    const double pen = tau_ * spectral_norm(loop_.controller->C_c) *
                       spectral_norm(loop_.controller->B_c);
    lip_dyn_ = maps_.G_inv_norm() + pen;
    const double safe = maps_.re_G_inv_floor() / (lip_dyn_ * lip_dyn_);
    double best_a = safe, best_f = 2.0;
    for (int k = 0; k <= 160; ++k) {
      const double a = safe * std::pow((2.0 / lip_dyn_) / safe, k / 160.0);
      const double f =
          spectral_norm(Matrix(Matrix::Identity(Nd, Nd) - a * B)) + a * pen;
      if (f < best_f) {
        best_f = f;
        best_a = a;
      }
    }
    alpha_dyn_ = best_a;
  }
}

StepOutput LoopRunner::step_static(const Vector& x) {
  const DiscreteSystem& sys = *loop_.system;
  const double dt = loop_.dt;
  PortSolution sol = solve_port_inclusion(maps_, *loop_.static_feedback, x, loop_.solver,
                                          warm_ ? &*warm_ : nullptr);
  warm_ = sol.y;
  StepOutput out;
  const Vector& xs = sol.x;  // stage state (endpoint for BE, midpoint otherwise)
  out.x = loop_.stepper == Stepper::BackwardEuler ? xs : Vector(2.0 * xs - x);
  out.x_c = Vector();
  out.u = sol.u;
  out.y = sol.y;
  out.iterations = sol.iterations;
  out.residual = sol.residual;
  const double dE = sys.energy(out.x) - sys.energy(x);
  out.power_residual = std::abs(dE / dt - sol.u.dot(sol.y) + sys.internal_gap(xs));
  out.diffquot_norm = sys.energy_norm(out.x - x) / dt;
  return out;
}

StepOutput LoopRunner::step_dynamic(const Vector& x, const Vector& x_c) {
  const DiscreteSystem& sys = *loop_.system;
  const Controller& ctrl = *loop_.controller;
  const double dt = loop_.dt;
  const Matrix& B = maps_.G_inv();

  const Vector x0 = maps_.apply_Phi(x);
  const Vector Ff = sys.output_op() * x0;
  const Vector c0 = B * Ff;

  Vector y = warm_ ? *warm_ : Vector(Ff);
  const double stop_scale = 1.0 / alpha_dyn_ + lip_dyn_;
  std::vector<double> history;
  bool converged = false;
  int it = 0;
  for (; it < loop_.solver.max_iterations; ++it) {
    const Vector xc_stage = ctrl.drift.resolve(tau_, x_c + tau_ * (ctrl.B_c * y));
    const Vector psi = B * y - c0 + ctrl.C_c * xc_stage;
    const Vector ynew = ctrl.D_c.resolve(alpha_dyn_, y - alpha_dyn_ * psi);
    const double change = (ynew - y).norm();
    history.push_back(change * stop_scale);
    y = ynew;
    if (change * stop_scale <= loop_.solver.tolerance * (1.0 + y.norm())) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged)
    throw NonconvergenceError("closed loop: joint controller/port inclusion did not converge",
                              std::move(history));
  warm_ = y;

  const Vector arg = x_c + tau_ * (ctrl.B_c * y);
  const Vector xc_stage = ctrl.drift.resolve(tau_, arg);
  const Vector drift_sel = (arg - xc_stage) / tau_;      // in drift(xc_stage)
  const Vector w_sel = c0 - B * y - ctrl.C_c * xc_stage; // in D_c(y)
  const Vector y_ctrl = ctrl.C_c * xc_stage + w_sel;
  const Vector u_bar = -y_ctrl;                          // = G^{-1}(y - Ff)
  const Vector xs = x0 + maps_.Psi() * u_bar;

  StepOutput out;
  if (loop_.stepper == Stepper::BackwardEuler) {
    out.x = xs;
    out.x_c = xc_stage;
  } else {
    out.x = 2.0 * xs - x;
    out.x_c = 2.0 * xc_stage - x_c;
  }
  out.u = u_bar;
  out.y = y;
  out.y_c = y_ctrl;
  out.iterations = it;
  out.residual = ctrl.D_c.graph_distance(y, w_sel);

  const auto ectrl = [&](const Vector& v) { return 0.5 * v.dot(ctrl.weight * v); };
  const double dE = sys.energy(out.x) + ectrl(out.x_c) - sys.energy(x) - ectrl(x_c);
  const double ctrl_diss = drift_sel.dot(xc_stage) + w_sel.dot(y);
  out.power_residual = std::abs(dE / dt + ctrl_diss + sys.internal_gap(xs));
  const double dq2 = sys.energy_inner(out.x - x, out.x - x) +
                     (out.x_c - x_c).dot(out.x_c - x_c);
  out.diffquot_norm = std::sqrt(std::max(0.0, dq2)) / dt;
  return out;
}

StepOutput LoopRunner::step(const Vector& x, const Vector& x_c) {
  return loop_.controller ? step_dynamic(x, x_c) : step_static(x);
}

EnergyTrace LoopRunner::run(const Vector& x0, const Vector& xc0) {
  const DiscreteSystem& sys = *loop_.system;
  if (!x0.allFinite()) throw std::invalid_argument("run: non-finite initial state");
  EnergyTrace tr;
  tr.port_dim = sys.model().port_dim();
  tr.dynamic = loop_.controller.has_value();
  Vector x = x0;
  Vector xc = tr.dynamic ? xc0 : Vector();
  if (tr.dynamic && xc.size() != loop_.controller->n_c)
    throw std::invalid_argument("run: controller state size mismatch");

  const auto ectrl = [&](const Vector& v) {
    return tr.dynamic ? 0.5 * v.dot(loop_.controller->weight * v) : 0.0;
  };
  tr.times.push_back(0.0);
  tr.E_state.push_back(sys.energy(x));
  tr.E_ctrl.push_back(ectrl(xc));
  tr.power_residual.push_back(0.0);
  tr.diffquot_norm.push_back(0.0);
  tr.u.push_back(sys.input_op() * x);
  tr.y.push_back(sys.output_op() * x);
  if (tr.dynamic)
    tr.y_c.push_back(loop_.controller->C_c * xc +
                     loop_.controller->D_c.minimal_section(sys.output_op() * x));

  const int n = steps();
  for (int k = 1; k <= n; ++k) {
    StepOutput s = step(x, xc);
    x = s.x;
    if (tr.dynamic) xc = s.x_c;
    tr.total_inner_iterations += s.iterations;
    tr.max_inner_iterations = std::max(tr.max_inner_iterations, s.iterations);
    tr.max_graph_residual = std::max(tr.max_graph_residual, s.residual);
    tr.times.push_back(k * loop_.dt);
    tr.E_state.push_back(sys.energy(x));
    tr.E_ctrl.push_back(ectrl(xc));
    tr.power_residual.push_back(s.power_residual);
    tr.diffquot_norm.push_back(s.diffquot_norm);
    tr.u.push_back(s.u);
    tr.y.push_back(s.y);
    if (tr.dynamic) tr.y_c.push_back(s.y_c);
  }
  return tr;
}

EnergyTrace run(const ClosedLoop& loop, const Vector& x0, const Vector& xc0) {
  LoopRunner runner(loop);
  return runner.run(x0, xc0);
}

namespace {

// Nodewise fractional power H_j^{1/n} (and inverse) via the symmetric eigenproblem.
std::vector<Matrix> nodal_power(const std::vector<Matrix>& H, double expnt) {
  std::vector<Matrix> out;
  out.reserve(H.size());
  for (const auto& Hj : H) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Hj);
    out.push_back(es.eigenvectors() *
                  es.eigenvalues().array().pow(expnt).matrix().asDiagonal() *
                  es.eigenvectors().transpose());
  }
  return out;
}

double nodal_norm(const std::vector<Matrix>& blocks) {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, spectral_norm(b));
  return worst;
}

Vector nodal_apply(const std::vector<Matrix>& blocks, const Vector& x) {
  const int d = static_cast<int>(blocks.front().rows());
  Vector out(x.size());
  for (std::size_t j = 0; j < blocks.size(); ++j)
    out.segment(j * d, d) = blocks[j] * x.segment(j * d, d);
  return out;
}

}  // namespace

Vector contraction_resolve(const DiscreteSystem& sys, const MonotoneMap& phi, double tau,
                           const Vector& f, const SolverOptions& opt,
                           ContractionReport* report) {
  const PhsModel& model = sys.model();
  const int d = model.dim();
  const int m = sys.grid().nodes();

  // H = I twin of the same closed-loop operator
  ModelDesc desc;
  desc.order = model.order();
  desc.dim = d;
  for (int k = 0; k <= model.order(); ++k) desc.P.push_back(model.P(k));
  desc.H = Hamiltonian::constant(Matrix::Identity(d, d));
  desc.W_B = model.W_B();
  desc.W_C = model.W_C();
  auto twin_model = std::make_shared<PhsModel>(build_model(desc));
  auto twin =
      std::make_shared<DiscreteSystem>(build_discrete(twin_model, sys.grid().n_cells,
                                                      sys.dissipation()));
  DiscreteIoMaps maps_I(twin, tau);

  std::vector<Matrix> P_nodes;
  P_nodes.reserve(m);
  for (int j = 0; j < m; ++j) P_nodes.push_back(sys.H_node(j));
  std::vector<Matrix> PmI;
  for (const auto& Pj : P_nodes) PmI.push_back(Pj - Matrix::Identity(d, d));
  const double p_dev = nodal_norm(PmI);

  ContractionReport rep;
  int base_solves = 0;
  const auto base = [&](const Vector& g) {
    ++base_solves;
    return solve_port_inclusion(maps_I, phi, g, opt).x;
  };

  if (p_dev <= 1e-14) {  // H = I: single direct solve, zero outer iterations
    Vector x = base(f);
    rep.split_levels = 1;
    rep.rho = 0.0;
    rep.base_solves = base_solves;
    if (report) *report = rep;
    return x;
  }

  int n_split = 1;
  if (p_dev >= 0.5) {
    rep.split_used = true;
    while (true) {
      ++n_split;
      std::vector<Matrix> QmI;
      for (const auto& Pj : P_nodes)
        QmI.push_back(nodal_power({Pj}, 1.0 / n_split).front() - Matrix::Identity(d, d));
      if (nodal_norm(QmI) < 0.5) break;
      if (n_split > 64)
        throw NonconvergenceError("contraction_resolve: could not split H into Q^n", {});
    }
  }
  const std::vector<Matrix> Q = nodal_power(P_nodes, 1.0 / n_split);
  const std::vector<Matrix> Qinv = nodal_power(P_nodes, -1.0 / n_split);
  std::vector<Matrix> QmI;
  for (std::size_t j = 0; j < Q.size(); ++j)
    QmI.push_back(Q[j] - Matrix::Identity(d, d));
  rep.split_levels = n_split;
  rep.rho = nodal_norm(QmI) * nodal_norm(Qinv);
  if (rep.rho >= 1.0)
    throw NonconvergenceError("contraction_resolve: per-stage rho = " +
                                  std::to_string(rep.rho) + " >= 1",
                              {});

  // level k solves (I - A Q^k)x ∋ g through the fixed point
  //   x = Q^{-1} R_{k-1}(g - (I - Q) x)
  std::function<Vector(int, const Vector&, double)> level =
      [&](int k, const Vector& g, double tol) -> Vector {
    if (k == 0) return base(g);
    Vector x = nodal_apply(Qinv, level(k - 1, g, tol * 0.1));
    for (int it = 0; it < opt.max_iterations; ++it) {
      const Vector inner = level(k - 1, g - (x - nodal_apply(Q, x)), tol * 0.1);
      const Vector xn = nodal_apply(Qinv, inner);
      const double change = (xn - x).norm();
      x = xn;
      if (change <= tol * (1.0 + x.norm())) return x;
    }
    throw NonconvergenceError("contraction_resolve: level " + std::to_string(k) +
                                  " did not converge (rho " + std::to_string(rep.rho) + ")",
                              {});
  };

  const double tol = std::max(opt.tolerance, 1e-13);
  Vector x = level(n_split, f, tol);
  rep.base_solves = base_solves;
  if (report) *report = rep;
  return x;
}

ControllerReport verify_controller(const Controller& ctrl, int trials, double horizon,
                                   std::uint64_t seed) {
  ctrl.validate();
  CounterRng rng(seed, "verify-controller");
  ControllerReport rep;
  const int nc = ctrl.n_c;
  const int Nd = static_cast<int>(ctrl.B_c.cols());
  const Matrix& W = ctrl.weight;

  // (i) dissipation inequality on sampled graph points of M_c
  double rho_hat = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const Vector xc = rng.log_uniform(1e-2, 1e2) * rng.normal_vec(nc);
    const Vector uc = rng.log_uniform(1e-2, 1e2) * rng.normal_vec(Nd);
    const Vector zc = -ctrl.drift.minimal_section(xc) + ctrl.B_c * uc;
    const Vector second = -(ctrl.C_c * xc + ctrl.D_c.minimal_section(uc));
    const double pairing = zc.dot(W * xc) + second.dot(uc);
    const double denom = xc.dot(W * xc) + (ctrl.Pi * uc).squaredNorm();
    if (denom > 1e-14) {
      rho_hat = std::min(rho_hat, -pairing / denom);
    } else if (pairing > 1e-12) {
      rho_hat = -std::numeric_limits<double>::infinity();
    }
  }
  rep.rho_hat = trials > 0 ? rho_hat : 0.0;
  rep.dissipation_ok = rep.rho_hat > 0.0;
  if (!rep.dissipation_ok) rep.violation = "dissipation inequality fails";

  // (ii) output bound, probing ker Pi explicitly
  double cp = 0.0;
  bool out_ok = true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(ctrl.Pi);
  for (int i = 0; i < Nd && out_ok; ++i) {
    if (es.eigenvalues()(i) < 0.5) {
      const Vector uc = es.eigenvectors().col(i);
      const Vector yc = ctrl.D_c.minimal_section(uc);  // x_c = 0
      if (yc.norm() > 1e-10) {
        out_ok = false;
        rep.violation = "output bound fails on ker Pi";
      }
    }
  }
  for (int t = 0; t < trials && out_ok; ++t) {
    const Vector xc = rng.log_uniform(1e-2, 1e2) * rng.normal_vec(nc);
    const Vector uc = rng.log_uniform(1e-2, 1e2) * rng.normal_vec(Nd);
    const Vector yc = ctrl.C_c * xc + ctrl.D_c.minimal_section(uc);
    const double denom = xc.dot(W * xc) + (ctrl.Pi * uc).squaredNorm();
    if (denom > 1e-14) cp = std::max(cp, yc.squaredNorm() / denom);
  }
  rep.c_prime_hat = cp;
  rep.output_bound_ok = out_ok;

  // (iii) L2-gain decay fit from simulation with piecewise-constant inputs
  rep.t0 = horizon;
  const int substeps = 64;
  const double h = horizon / substeps;
  const auto simulate = [&](Vector xc, const std::vector<Vector>& u_seq) {
    double pi_u_l2 = 0.0;
    for (const auto& u : u_seq) {
      xc = ctrl.drift.resolve(h, xc + h * (ctrl.B_c * u));
      pi_u_l2 += h * (ctrl.Pi * u).squaredNorm();
    }
    return std::make_pair(xc, pi_u_l2);
  };
  double worst_free = 0.0;
  for (int t = 0; t < std::max(4, trials / 4); ++t) {
    Vector xc0 = rng.normal_vec(nc);
    if (xc0.norm() == 0.0) continue;
    auto [xcT, l2] = simulate(xc0, std::vector<Vector>(substeps, Vector::Zero(Nd)));
    worst_free = std::max(worst_free, xcT.dot(W * xcT) / xc0.dot(W * xc0));
  }
  rep.delta_hat = 1.0 - worst_free;
  double c_hat = 0.0;
  for (int t = 0; t < std::max(4, trials / 4); ++t) {
    Vector xc0 = rng.normal_vec(nc);
    std::vector<Vector> u_seq(substeps);
    for (auto& u : u_seq) u = rng.normal_vec(Nd);
    auto [xcT, l2] = simulate(xc0, u_seq);
    const double excess =
        xcT.dot(W * xcT) - (1.0 - rep.delta_hat) * xc0.dot(W * xc0);
    if (l2 > 1e-14) c_hat = std::max(c_hat, std::max(0.0, excess) / l2);
  }
  rep.c_hat = c_hat;
  rep.l2_gain_ok = rep.delta_hat > 0.0;
  if (!rep.l2_gain_ok && rep.violation.empty()) rep.violation = "no strict state decay over the horizon";

  rep.ok = rep.dissipation_ok && rep.output_bound_ok && rep.l2_gain_ok;
  return rep;
}

}  // namespace phsim
