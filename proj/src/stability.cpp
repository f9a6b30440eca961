#include "phsim/stability.hpp"

#include <cmath>

namespace phsim {

double Multiplier::eval(double z) const {
  return form == Form::ExpMinusOne ? scale * (std::exp(lambda * z) - 1.0) : 1.0 - z;
}

double Multiplier::deriv(double z) const {
  return form == Form::ExpMinusOne ? scale * lambda * std::exp(lambda * z) : -1.0;
}

Multiplier Multiplier::one_minus_zeta() {
  Multiplier m;
  m.form = Form::OneMinusZeta;
  return m;
}

namespace {

double multiplier_margin(const Multiplier& m, int audit_points) {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < audit_points; ++k) {
    const double z = static_cast<double>(k) / (audit_points - 1);
    worst = std::min(worst, m.alpha * m.deriv(z) - m.beta * m.eval(z) - m.gamma);
  }
  return worst;
}

}  // namespace

Multiplier make_multiplier(double alpha, double beta, double gamma, int audit_points) {
  if (alpha <= 0.0) throw std::invalid_argument("make_multiplier: alpha must be > 0");
  if (beta < 0.0 || gamma < 0.0)
    throw std::invalid_argument("make_multiplier: beta, gamma must be >= 0");
  Multiplier m;
  m.alpha = alpha;
  m.beta = beta;
  m.gamma = gamma;
  m.lambda = std::max(gamma / alpha, 1e-2);
  for (;;) {
    m.margin = multiplier_margin(m, audit_points);
    if (m.margin >= 0.0) return m;
    m.lambda *= 2.0;  // terminates: alpha*lambda e^{lz} dominates beta e^{lz} eventually
  }
}

Multiplier descent_multiplier(const PhsModel& model, int audit_points) {
  const int d = model.dim();
  double m0 = std::numeric_limits<double>::infinity();  // min eig H^{-1}
  double M0 = 0.0;                                      // max eig H^{-1}
  double M1 = 0.0;                                      // sup (H^{-1})' bound
  double M3 = 0.0;                                      // sup |Re(H^{-1} P1^{-1} P0)|
  const Matrix P1inv = solve_dense(model.P(1), Matrix(Matrix::Identity(d, d)));
  for (int k = 0; k < audit_points; ++k) {
    const double z = static_cast<double>(k) / (audit_points - 1);
    const Matrix H = model.H().eval(z);
    const Matrix Hinv = solve_dense(H, Matrix(Matrix::Identity(d, d)));
    auto [lo, hi] = sym_part_bounds(Hinv);
    m0 = std::min(m0, lo);
    M0 = std::max(M0, hi);
    // (H^{-1})' = -H^{-1} H' H^{-1}
    const Matrix dHinv = -Hinv * model.H().deriv(z) * Hinv;
    M1 = std::max(M1, sym_part_bounds(dHinv).second);
    const Matrix cross = Hinv * P1inv * model.P(0);
    const auto [clo, chi] = sym_part_bounds(cross);
    M3 = std::max({M3, std::abs(clo), std::abs(chi)});
  }
  return make_multiplier(m0, M1 + 2.0 * M3, M0, audit_points);
}

namespace {

// cumulative trapezoid antiderivative of a nodal d-vector field
Vector running_integral(const Vector& x, int m, int d, double dz) {
  Vector I = Vector::Zero(m * d);
  for (int j = 1; j < m; ++j)
    I.segment(j * d, d) =
        I.segment((j - 1) * d, d) + 0.5 * dz * (x.segment((j - 1) * d, d) + x.segment(j * d, d));
  return I;
}

}  // namespace

QEval lyapunov_q(const DiscreteSystem& sys, QProfile profile, const Multiplier& eta,
                 const Vector& x) {
  const PhsModel& model = sys.model();
  const int d = model.dim();
  const int m = sys.grid().nodes();
  const double dz = sys.grid().dz();
  if (x.size() != sys.state_dim()) throw DimensionError("lyapunov_q: state size mismatch");
  const Vector w = sys.grid().weights();

  double eta_max = 0.0;
  for (int k = 0; k <= 256; ++k)
    eta_max = std::max(eta_max, std::abs(eta.eval(k / 256.0)));
  const double m0 = model.H().coercivity_floor();

  QEval out;
  switch (profile) {
    case QProfile::N1: {
      if (model.order() != 1)
        throw std::invalid_argument("lyapunov_q: N1 profile needs an order-1 model");
      if (eta.form != Multiplier::Form::ExpMinusOne)
        throw std::invalid_argument("lyapunov_q: N1 profile needs eta(0) = 0, eta' > 0");
      const Matrix P1inv = solve_dense(model.P(1), Matrix(Matrix::Identity(d, d)));
      double q = 0.0;
      for (int j = 0; j < m; ++j) {
        const auto xj = x.segment(j * d, d);
        q += w(j) * eta.eval(sys.grid().node(j)) * xj.dot(P1inv * xj);
      }
      out.value = q;
      out.c_hat = eta_max * spectral_norm(P1inv) / m0;
      return out;
    }
    case QProfile::N2: {
      if (model.order() != 2)
        throw std::invalid_argument("lyapunov_q: N2 profile needs an order-2 model");
      const Matrix P2inv = solve_dense(model.P(2), Matrix(Matrix::Identity(d, d)));
      const Vector I = running_integral(x, m, d, dz);
      double q = 0.0;
      for (int j = 0; j < m; ++j) {
        const auto xj = x.segment(j * d, d);
        const auto Ij = I.segment(j * d, d);
        const double ez = eta.eval(sys.grid().node(j));
        q += w(j) * ez * xj.dot(P2inv * Ij);
        q -= 0.5 * w(j) * ez * (P2inv * Ij).dot(model.P(1) * (P2inv * Ij));
      }
      out.value = q;
      const double np2i = spectral_norm(P2inv);
      out.c_hat =
          (eta_max * np2i / std::sqrt(2.0) +
           0.25 * eta_max * spectral_norm(model.P(1)) * np2i * np2i) /
          m0;
      return out;
    }
    case QProfile::EB: {
      if (!is_eb_structured(model))
        throw std::invalid_argument("lyapunov_q: EB profile needs the Euler-Bernoulli block form");
      if (eta.form != Multiplier::Form::OneMinusZeta)
        throw std::invalid_argument("lyapunov_q: EB profile needs eta(1) = 0");
      const int h = d / 2;
      const Matrix P = model.P(2).block(h, 0, h, h);  // P2 = [[0, -P^T], [P, 0]]
      const Matrix Pinv = solve_dense(P, Matrix(Matrix::Identity(h, h)));
      // running integral of the x2 block
      Vector x2(m * h);
      for (int j = 0; j < m; ++j) x2.segment(j * h, h) = x.segment(j * d + h, h);
      const Vector I2 = running_integral(x2, m, h, dz);
      double q = 0.0;
      for (int j = 0; j < m; ++j) {
        const auto x1j = x.segment(j * d, h);
        q += w(j) * eta.eval(sys.grid().node(j)) * x1j.dot(Pinv * I2.segment(j * h, h));
      }
      out.value = q;
      out.c_hat = eta_max * spectral_norm(Pinv) / (std::sqrt(2.0) * m0);
      return out;
    }
  }
  return out;
}

ConditionReport check_order2_condition(const PhsModel& model, int audit_points) {
  if (model.order() != 2)
    throw std::invalid_argument("check_order2_condition: order-2 model required");
  const int d = model.dim();
  const Matrix P2inv = solve_dense(model.P(2), Matrix(Matrix::Identity(d, d)));
  const Matrix& P0 = model.P(0);
  const Matrix& P1 = model.P(1);

  double t1 = 0.0;
  for (int k = 0; k < audit_points; ++k) {
    const double z = static_cast<double>(k) / (audit_points - 1);
    const Matrix H = model.H().eval(z);
    const Matrix Hp = model.H().deriv(z);
    const Matrix HpHinv = solve_dense(Matrix(H.transpose()), Matrix(Hp.transpose())).transpose();
    t1 = std::max(t1, spectral_norm(Matrix((HpHinv + P2inv * P1) * (z - 1.0))));
  }
  const double t2 =
      spectral_norm(Matrix(P0.transpose() * P2inv + P2inv * P0 - P1 * P2inv * P1 * P2inv)) /
      std::sqrt(2.0);
  const double t3 = 0.5 * spectral_norm(Matrix((P2inv * P0).transpose() * (P2inv * P0)));

  ConditionReport rep;
  rep.name = "order2-smallness";
  rep.lhs = t1 + t2 + t3;
  rep.threshold = 2.0;
  rep.pass = rep.lhs < 2.0;
  rep.terms = {{"coefficient-drift", t1}, {"p0-coupling", t2}, {"p0-quadratic", t3}};
  return rep;
}

bool is_eb_structured(const PhsModel& model, int audit_points) {
  if (model.order() != 2 || model.dim() % 2 != 0) return false;
  const int d = model.dim(), h = d / 2;
  if (spectral_norm(model.P(0)) > 0.0 || spectral_norm(model.P(1)) > 0.0) return false;
  const Matrix& P2 = model.P(2);
  if (spectral_norm(Matrix(P2.topLeftCorner(h, h))) > 1e-14 ||
      spectral_norm(Matrix(P2.bottomRightCorner(h, h))) > 1e-14)
    return false;
  for (int k = 0; k < audit_points; ++k) {
    const double z = static_cast<double>(k) / (audit_points - 1);
    const Matrix H = model.H().eval(z);
    if (spectral_norm(Matrix(H.topRightCorner(h, h))) > 1e-12 ||
        spectral_norm(Matrix(H.bottomLeftCorner(h, h))) > 1e-12)
      return false;
  }
  return true;
}

ConditionReport check_eb_condition(const PhsModel& model, int audit_points) {
  if (!is_eb_structured(model))
    throw std::invalid_argument("check_eb_condition: Euler-Bernoulli block structure required");
  const int d = model.dim(), h = d / 2;
  double n1 = 0.0, n2 = 0.0;
  for (int k = 0; k < audit_points; ++k) {
    const double z = static_cast<double>(k) / (audit_points - 1);
    const Matrix H = model.H().eval(z);
    const Matrix Hp = model.H().deriv(z);
    const Matrix H1 = H.topLeftCorner(h, h), H2 = H.bottomRightCorner(h, h);
    const Matrix H1p = Hp.topLeftCorner(h, h), H2p = Hp.bottomRightCorner(h, h);
    n1 = std::max(n1, spectral_norm(
                          Matrix(solve_dense(Matrix(H1.transpose()), Matrix(H1p.transpose()))
                                     .transpose())));
    n2 = std::max(n2, spectral_norm(
                          Matrix(solve_dense(Matrix(H2.transpose()), Matrix(H2p.transpose()))
                                     .transpose())));
  }
  ConditionReport rep;
  rep.name = "eb-smallness";
  rep.lhs = std::max(n1, n2);
  rep.threshold = 1.0;
  rep.pass = rep.lhs < 1.0;
  rep.terms = {{"H1-drift", n1}, {"H2-drift", n2}};
  return rep;
}

ConditionReport check_boundary_bound(const PhsModel& model, const PortUse& use,
                                     QProfile profile) {
  const int N = model.order(), d = model.dim();
  const int Nd = N * d, td = 2 * Nd;

  // trace-side quadratic form (selector on the raw trace stack)
  Matrix AT = Matrix::Zero(td, td);
  switch (profile) {
    case QProfile::N1:
      if (N != 1) throw std::invalid_argument("check_boundary_bound: N1 profile needs order 1");
      AT.block(0, 0, d, d).setIdentity();  // |z(1)|^2
      break;
    case QProfile::N2:
      if (N != 2) throw std::invalid_argument("check_boundary_bound: N2 profile needs order 2");
      AT.block(0, 0, d, d).setIdentity();              // |z(1)|^2
      AT.block(2 * d, 2 * d, d, d).setIdentity();      // |z(0)|^2
      AT.block(3 * d, 3 * d, d, d).setIdentity();      // |z'(0)|^2
      break;
    case QProfile::EB: {
      if (!is_eb_structured(model))
        throw std::invalid_argument("check_boundary_bound: EB profile needs the EB block form");
      const int h = d / 2;
      AT.block(h, h, h, h).setIdentity();              // |(H2 x2)(1)|^2
      AT.block(2 * d, 2 * d, d, d).setIdentity();      // |z(0)|^2
      AT.block(3 * d, 3 * d, h, h).setIdentity();      // |(H1 x1)'(0)|^2
      break;
    }
  }

  const Matrix UB = (use.Pi_in ? *use.Pi_in : Matrix(Matrix::Identity(Nd, Nd))) *
                    model.W_B() * model.R_ext();
  const Matrix YC = use.Pi_out * model.W_C() * model.swap() * model.R_ext();
  const Matrix AP = UB.transpose() * UB + YC.transpose() * YC;

  ConditionReport rep;
  rep.name = "boundary-trace-bound";
  rep.threshold = std::numeric_limits<double>::infinity();

  Eigen::SelfAdjointEigenSolver<Matrix> es(AP);
  const double lam_max = std::max(es.eigenvalues().maxCoeff(), 1e-300);
  const double cut = 1e-12 * lam_max;
  // kernel of the port form must avoid the trace combination
  for (int i = 0; i < td; ++i) {
    if (es.eigenvalues()(i) <= cut) {
      const Vector v = es.eigenvectors().col(i);
      if ((AT * v).norm() > 1e-10) {
        rep.lhs = std::numeric_limits<double>::infinity();
        rep.pass = false;
        rep.terms = {{"kernel-overlap", (AT * v).norm()}};
        return rep;
      }
    }
  }
  // restrict to the range and compute the largest generalized eigenvalue
  std::vector<int> keep;
  for (int i = 0; i < td; ++i)
    if (es.eigenvalues()(i) > cut) keep.push_back(i);
  Matrix Mhalf(td, static_cast<int>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    Mhalf.col(c) = es.eigenvectors().col(keep[c]) / std::sqrt(es.eigenvalues()(keep[c]));
  const Matrix R = Mhalf.transpose() * AT * Mhalf;
  rep.lhs = sym_part_bounds(R).second;
  rep.pass = std::isfinite(rep.lhs);
  rep.terms = {{"certificate", rep.lhs}};
  return rep;
}

DecayFit estimate_decay(const std::vector<double>& times, const std::vector<double>& energy,
                        double window_fraction) {
  if (times.size() != energy.size())
    throw std::invalid_argument("estimate_decay: series length mismatch");
  const std::size_t n = times.size();
  const std::size_t i0 = static_cast<std::size_t>(n * (1.0 - window_fraction));
  std::vector<double> t, le;
  for (std::size_t i = i0; i < n; ++i) {
    if (energy[i] > 0.0) {
      t.push_back(times[i]);
      le.push_back(std::log(energy[i]));
    }
  }
  if (t.size() < 32)
    throw std::invalid_argument("estimate_decay: need >= 32 positive-energy samples in the window");
  const double n_ = static_cast<double>(t.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sl += le[i];
    stt += t[i] * t[i];
    stl += t[i] * le[i];
  }
  const double det = n_ * stt - st * st;
  const double slope = (n_ * stl - st * sl) / det;
  const double intercept = (sl * stt - st * stl) / det;
  double ss_res = 0, ss_tot = 0;
  const double mean = sl / n_;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double pred = intercept + slope * t[i];
    ss_res += (le[i] - pred) * (le[i] - pred);
    ss_tot += (le[i] - mean) * (le[i] - mean);
  }
  DecayFit fit;
  fit.omega_hat = 0.5 * slope;
  fit.fit_quality = ss_tot > 1e-28 ? 1.0 - ss_res / ss_tot : 1.0;
  const double e0 = energy.front() > 0.0 ? energy.front() : 1.0;
  fit.M_hat = std::sqrt(std::exp(intercept) / e0);
  return fit;
}

DecayFit estimate_decay(const EnergyTrace& trace, double window_fraction) {
  std::vector<double> etot(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i)
    etot[i] = trace.E_state[i] + trace.E_ctrl[i];
  return estimate_decay(trace.times, etot, window_fraction);
}

double descent_start_time(const Multiplier& eta, double kappa_tilde) {
  if (kappa_tilde <= 0.0)
    throw std::invalid_argument("descent_start_time: kappa_tilde must be > 0");
  return eta.at_one() / (2.0 * kappa_tilde);
}

}  // namespace phsim
