#include "phsim/discrete.hpp"

#include <cmath>

#include "phsim/rng.hpp"

namespace phsim {

Vector Grid::weights() const {
  Vector w = Vector::Constant(nodes(), dz());
  w(0) *= 0.5;
  w(nodes() - 1) *= 0.5;
  return w;
}

namespace {

Matrix sbp_d1(int n) {
  const int m = n + 1;
  const double h = 1.0 / n;
  Matrix D = Matrix::Zero(m, m);
  for (int j = 1; j < m - 1; ++j) {
    D(j, j - 1) = -0.5 / h;
    D(j, j + 1) = 0.5 / h;
  }
  D(0, 0) = -1.0 / h;
  D(0, 1) = 1.0 / h;
  D(m - 1, m - 1) = 1.0 / h;
  D(m - 1, m - 2) = -1.0 / h;
  return D;
}

Matrix kron_nodes(const Matrix& D, int d) {
  const int m = static_cast<int>(D.rows());
  Matrix out = Matrix::Zero(m * d, m * d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (D(i, j) != 0.0)
        out.block(i * d, j * d, d, d) = D(i, j) * Matrix::Identity(d, d);
  return out;
}

Matrix block_apply(const Matrix& P, int m) {
  const int d = static_cast<int>(P.rows());
  Matrix out = Matrix::Zero(m * d, m * d);
  for (int j = 0; j < m; ++j) out.block(j * d, j * d, d, d) = P;
  return out;
}

}  // namespace

DiscreteSystem build_discrete(std::shared_ptr<const PhsModel> model, int n_cells,
                              double dissipation) {
  const int N = model->order(), d = model->dim();
  if (n_cells < 8 * N)
    throw std::invalid_argument("build_discrete: grid too coarse, need n_cells >= 8*order");
  DiscreteSystem sys;
  sys.model_ = std::move(model);
  sys.grid_ = Grid{n_cells};
  const int m = n_cells + 1;
  sys.D1_ = sbp_d1(n_cells);
  sys.w_ = sys.grid_.weights();

  sys.H_nodes_.reserve(m);
  sys.H_inv_nodes_.reserve(m);
  for (int j = 0; j < m; ++j) {
    Matrix H = sys.model_->H().eval(sys.grid_.node(j));
    sys.H_nodes_.push_back(H);
    sys.H_inv_nodes_.push_back(solve_dense(H, Matrix(Matrix::Identity(d, d))));
  }

  // A_h x = sum_k P_k D1^k (Hx) nodewise
  Matrix Z = Matrix::Zero(m * d, m * d);
  for (int j = 0; j < m; ++j) Z.block(j * d, j * d, d, d) = sys.H_nodes_[j];
  const Matrix Dd = kron_nodes(sys.D1_, d);
  Matrix A = block_apply(sys.model_->P(0), m) * Z;
  Matrix Dk = Dd * Z;
  A += block_apply(sys.model_->P(1), m) * Dk;
  if (N == 2) {
    Dk = Dd * Dk;
    A += block_apply(sys.model_->P(2), m) * Dk;
  }

  // traces of z = Hx (values and D1-row derivatives at both ends)
  const int Nd = N * d;
  Matrix T = Matrix::Zero(2 * Nd, m * d);
  Matrix Dkz = Z;
  for (int k = 0; k < N; ++k) {
    T.middleRows(k * d, d) = Dkz.middleRows((m - 1) * d, d);
    T.middleRows((N + k) * d, d) = Dkz.middleRows(0, d);
    Dkz = Dd * Dkz;
  }
  sys.T_ = T;
  sys.U_ = sys.model_->W_B() * sys.model_->R_ext() * T;
  sys.Y_ = sys.model_->W_C() * sys.model_->swap() * sys.model_->R_ext() * T;

  sys.dissipation_ = dissipation;
  if (dissipation > 0.0) {
    // -(c/dz) Ww^{-1} S^T Ww S acting on z = Hx: symmetric negative semidefinite
    // in <.,.>_h for any H, and the weighted generator stays the composition of
    // the H = I generator with nodewise multiplication by H.
    Matrix S = Matrix::Zero(m, m);
    for (int j = 1; j < m - 1; ++j) {
      S(j, j - 1) = 1.0;
      S(j, j) = -2.0;
      S(j, j + 1) = 1.0;
    }
    const Matrix Sk = kron_nodes(S, d);
    sys.dis_stencil_ = Sk * Z;
    Matrix adj = Sk.transpose();
    for (int j = 0; j < m; ++j) {
      adj.middleRows(j * d, d) /= sys.w_(j);  // Ww^{-1} S^T
      adj.middleCols(j * d, d) *= sys.w_(j);  // ... Ww
    }
    Matrix Adis = -(dissipation / sys.grid_.dz()) * adj * sys.dis_stencil_;
    sys.Adis_ = Adis;
    A += Adis;
  }
  sys.A_ = A;

  const double res = sys.sbp_residual(8, 1234);
  if (res > 1e-13)
    throw std::logic_error("build_discrete: SBP identity residual " + std::to_string(res));
  return sys;
}

Vector DiscreteSystem::apply_mass(const Vector& x) const {
  const int m = grid_.nodes(), d = model_->dim();
  Vector out(m * d);
  for (int j = 0; j < m; ++j)
    out.segment(j * d, d) = w_(j) * (H_nodes_[j] * x.segment(j * d, d));
  return out;
}

Vector DiscreteSystem::apply_mass_inv(const Vector& x) const {
  const int m = grid_.nodes(), d = model_->dim();
  Vector out(m * d);
  for (int j = 0; j < m; ++j)
    out.segment(j * d, d) = (H_inv_nodes_[j] * x.segment(j * d, d)) / w_(j);
  return out;
}

double DiscreteSystem::energy_inner(const Vector& a, const Vector& b) const {
  return a.dot(apply_mass(b));
}

double DiscreteSystem::energy_norm(const Vector& x) const {
  return std::sqrt(std::max(0.0, energy_inner(x, x)));
}

Vector DiscreteSystem::apply_H(const Vector& x) const {
  const int m = grid_.nodes(), d = model_->dim();
  Vector z(m * d);
  for (int j = 0; j < m; ++j) z.segment(j * d, d) = H_nodes_[j] * x.segment(j * d, d);
  return z;
}

double DiscreteSystem::p0_gap(const Vector& x) const {
  const Matrix& P0 = model_->P(0);
  if (spectral_norm(P0) == 0.0) return 0.0;
  const Matrix ReP0 = 0.5 * (P0 + P0.transpose());
  const int m = grid_.nodes(), d = model_->dim();
  const Vector z = apply_H(x);
  double gap = 0.0;
  for (int j = 0; j < m; ++j) {
    const auto zj = z.segment(j * d, d);
    gap -= w_(j) * zj.dot(ReP0 * zj);
  }
  return gap;
}

double DiscreteSystem::dissipation_gap(const Vector& x) const {
  if (dissipation_ <= 0.0) return 0.0;
  const Vector sx = dis_stencil_ * x;
  const int m = grid_.nodes(), d = model_->dim();
  double s = 0.0;
  for (int j = 0; j < m; ++j) s += w_(j) * sx.segment(j * d, d).squaredNorm();
  return (dissipation_ / grid_.dz()) * s;
}

double DiscreteSystem::sbp_residual(int trials, std::uint64_t seed) const {
  CounterRng rng(seed, "sbp-check");
  const int m = grid_.nodes();
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Vector a = rng.normal_vec(m), b = rng.normal_vec(m);
    const Vector Da = D1_ * a, Db = D1_ * b;
    double lhs = 0.0;
    for (int j = 0; j < m; ++j) lhs += w_(j) * (Da(j) * b(j) + a(j) * Db(j));
    const double rhs = a(m - 1) * b(m - 1) - a(0) * b(0);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return worst;
}

std::pair<double, double> discrete_power_balance(const DiscreteSystem& sys, const Vector& x) {
  // balance of the free generator; artificial dissipation is accounted separately
  const double lhs = sys.energy_inner(sys.generator() * x, x) + sys.dissipation_gap(x);
  const Vector u = sys.input_op() * x;
  const Vector y = sys.output_op() * x;
  return {lhs, u.dot(y)};
}

DiscreteIoMaps::DiscreteIoMaps(std::shared_ptr<const DiscreteSystem> sys, double tau)
    : sys_(std::move(sys)), tau_(tau) {
  if (tau <= 0.0) throw std::invalid_argument("discrete_io_maps: tau must be > 0");
  const DiscreteSystem& s = *sys_;
  const int n = s.state_dim();
  const int Nd = s.model().port_dim();

  // lifted output adjoint: columns of M^{-1} Y^T
  Matrix lift(n, Nd);
  for (int c = 0; c < Nd; ++c) lift.col(c) = s.apply_mass_inv(s.output_op().row(c).transpose());

  Matrix K = Matrix::Identity(n, n) - tau * s.generator() + tau * lift * s.input_op();
  K_lu_.compute(K);
  {
    const double minpiv = K_lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(minpiv > 1e-13))
      throw FactorizationError("discrete_io_maps: stationary operator singular; "
                               "check grid and tau");
  }
  Psi_ = tau * K_lu_.solve(lift);
  G_ = s.output_op() * Psi_;
  re_G_floor_ = sym_part_bounds(G_).first;
  if (re_G_floor_ <= 0.0)
    throw FactorizationError("discrete_io_maps: Re G_h not positive definite (min eig " +
                             std::to_string(re_G_floor_) + ")");
  G_inv_ = solve_dense(G_, Matrix(Matrix::Identity(Nd, Nd)));
  re_G_inv_floor_ = sym_part_bounds(G_inv_).first;
  G_inv_norm_ = spectral_norm(G_inv_);

  // constant FB step: scan for the minimizer of ||I - alpha B||, keep the
  // coercivity-derived m/L^2 as the guaranteed fallback
  const double safe = re_G_inv_floor_ / (G_inv_norm_ * G_inv_norm_);
  double best_a = safe;
  double best_f = spectral_norm(Matrix(Matrix::Identity(Nd, Nd) - safe * G_inv_));
  for (int k = 0; k <= 160; ++k) {
    const double a = safe * std::pow((2.0 / G_inv_norm_) / safe, k / 160.0);
    const double f = spectral_norm(Matrix(Matrix::Identity(Nd, Nd) - a * G_inv_));
    if (f < best_f) {
      best_f = f;
      best_a = a;
    }
  }
  fb_step_ = best_a;
  fb_factor_ = best_f;
}

Vector DiscreteIoMaps::apply_Phi(const Vector& f) const { return K_lu_.solve(f); }

Vector DiscreteIoMaps::apply_F(const Vector& f) const {
  return sys_->output_op() * K_lu_.solve(f);
}

DiscreteIoMaps discrete_io_maps(std::shared_ptr<const DiscreteSystem> sys, double tau) {
  return DiscreteIoMaps(std::move(sys), tau);
}

}  // namespace phsim
