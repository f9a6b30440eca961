#include "phsim/model.hpp"

#include <cmath>
#include <sstream>

#include "phsim/rng.hpp"

namespace phsim {

double ScalarProfile::eval(double z) const {
  switch (kind) {
    case Kind::Constant: return a;
    case Kind::Affine: return a + b * z;
    case Kind::Exponential: return a * std::exp(b * z);
  }
  return a;
}

double ScalarProfile::deriv(double z) const {
  switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::Affine: return b;
    case Kind::Exponential: return a * b * std::exp(b * z);
  }
  return 0.0;
}

Hamiltonian Hamiltonian::constant(Matrix H) {
  if (H.rows() != H.cols()) throw DimensionError("Hamiltonian::constant: square matrix required");
  Hamiltonian h(Kind::Constant, static_cast<int>(H.rows()));
  h.constant_ = std::move(H);
  return h;
}

Hamiltonian Hamiltonian::table(std::vector<Matrix> nodes) {
  if (nodes.size() < 2) throw std::invalid_argument("Hamiltonian::table: need >= 2 nodes");
  const auto d = nodes.front().rows();
  for (const auto& m : nodes)
    if (m.rows() != d || m.cols() != d)
      throw DimensionError("Hamiltonian::table: inconsistent node dimensions");
  Hamiltonian h(Kind::Table, static_cast<int>(d));
  h.table_ = std::move(nodes);
  return h;
}

Hamiltonian Hamiltonian::diag_profiles(std::vector<ScalarProfile> entries) {
  if (entries.empty()) throw std::invalid_argument("Hamiltonian::diag_profiles: empty");
  Hamiltonian h(Kind::DiagProfiles, static_cast<int>(entries.size()));
  h.profiles_ = std::move(entries);
  return h;
}

Matrix Hamiltonian::eval(double z) const {
  switch (kind_) {
    case Kind::Constant: return constant_;
    case Kind::Table: {
      const int m = static_cast<int>(table_.size()) - 1;
      double s = std::clamp(z, 0.0, 1.0) * m;
      int j = std::min(static_cast<int>(s), m - 1);
      double t = s - j;
      return (1.0 - t) * table_[j] + t * table_[j + 1];
    }
    case Kind::DiagProfiles: {
      Matrix H = Matrix::Zero(d_, d_);
      for (int i = 0; i < d_; ++i) H(i, i) = profiles_[i].eval(z);
      return H;
    }
  }
  return constant_;
}

Matrix Hamiltonian::deriv(double z) const {
  switch (kind_) {
    case Kind::Constant: return Matrix::Zero(d_, d_);
    case Kind::Table: {
      const int m = static_cast<int>(table_.size()) - 1;
      double s = std::clamp(z, 0.0, 1.0) * m;
      int j = std::min(static_cast<int>(s), m - 1);
      return static_cast<double>(m) * (table_[j + 1] - table_[j]);
    }
    case Kind::DiagProfiles: {
      Matrix H = Matrix::Zero(d_, d_);
      for (int i = 0; i < d_; ++i) H(i, i) = profiles_[i].deriv(z);
      return H;
    }
  }
  return Matrix::Zero(d_, d_);
}

double Hamiltonian::coercivity_floor(int audit_points) const {
  double floor = std::numeric_limits<double>::infinity();
  for (int k = 0; k < audit_points; ++k) {
    const double z = audit_points == 1 ? 0.0 : static_cast<double>(k) / (audit_points - 1);
    auto [lo, hi] = sym_part_bounds(eval(z));
    floor = std::min(floor, lo);
  }
  return floor;
}

double Hamiltonian::self_adjoint_defect(int audit_points) const {
  double worst = 0.0;
  for (int k = 0; k < audit_points; ++k) {
    const double z = audit_points == 1 ? 0.0 : static_cast<double>(k) / (audit_points - 1);
    const Matrix H = eval(z);
    worst = std::max(worst, spectral_norm(Matrix(H - H.transpose())));
  }
  return worst;
}

std::string to_string(ModelDefect d) {
  switch (d) {
    case ModelDefect::DimensionMismatch: return "dimension-mismatch";
    case ModelDefect::SymmetryViolation: return "symmetry-violation";
    case ModelDefect::IndefiniteP0: return "indefinite-P0";
    case ModelDefect::NonCoerciveH: return "non-coercive-H";
    case ModelDefect::SingularPN: return "singular-PN";
    case ModelDefect::SingularPortStack: return "singular-port-stack";
  }
  return "unknown";
}

namespace {
std::string join_diags(const std::vector<ModelDiagnostic>& diags) {
  std::ostringstream os;
  os << "model validation failed:";
  for (const auto& d : diags) os << " [" << to_string(d.defect) << "] " << d.detail;
  return os.str();
}
}  // namespace

ModelError::ModelError(std::vector<ModelDiagnostic> diags)
    : std::runtime_error(join_diags(diags)), diags_(std::move(diags)) {}

bool ModelError::has(ModelDefect d) const {
  for (const auto& x : diags_)
    if (x.defect == d) return true;
  return false;
}

namespace {

Matrix build_Q(const std::vector<Matrix>& P, int N, int d) {
  Matrix Q = Matrix::Zero(N * d, N * d);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const int k = i + j + 1;
      if (k <= N) Q.block(i * d, j * d, d, d) = ((i % 2 == 0) ? 1.0 : -1.0) * P[k];
    }
  return Q;
}

Matrix build_R(const Matrix& Q) {
  const int Nd = static_cast<int>(Q.rows());
  Matrix R(2 * Nd, 2 * Nd);
  R.topLeftCorner(Nd, Nd) = Q;
  R.topRightCorner(Nd, Nd) = -Q;
  R.bottomLeftCorner(Nd, Nd) = Matrix::Identity(Nd, Nd);
  R.bottomRightCorner(Nd, Nd) = Matrix::Identity(Nd, Nd);
  return R / std::sqrt(2.0);
}

Matrix build_swap(int Nd) {
  Matrix S = Matrix::Zero(2 * Nd, 2 * Nd);
  S.topRightCorner(Nd, Nd) = Matrix::Identity(Nd, Nd);
  S.bottomLeftCorner(Nd, Nd) = Matrix::Identity(Nd, Nd);
  return S;
}

}  // namespace

std::vector<ModelDiagnostic> validate_model(const ModelDesc& desc) {
  std::vector<ModelDiagnostic> diags;
  const int N = desc.order, d = desc.dim;
  if (N < 1 || N > 2) {
    diags.push_back({ModelDefect::DimensionMismatch, "order must be 1 or 2"});
    return diags;
  }
  if (d < 1) {
    diags.push_back({ModelDefect::DimensionMismatch, "dim must be >= 1"});
    return diags;
  }
  if (static_cast<int>(desc.P.size()) != N + 1) {
    diags.push_back({ModelDefect::DimensionMismatch, "expected P_0..P_N"});
    return diags;
  }
  for (int k = 0; k <= N; ++k)
    if (desc.P[k].rows() != d || desc.P[k].cols() != d) {
      diags.push_back({ModelDefect::DimensionMismatch, "P_" + std::to_string(k) + " is not d x d"});
      return diags;
    }
  if (!desc.H) {
    diags.push_back({ModelDefect::DimensionMismatch, "missing Hamiltonian density"});
    return diags;
  }
  if (desc.H->dim() != d)
    diags.push_back({ModelDefect::DimensionMismatch, "H dimension != d"});
  const int Nd = N * d;
  if (desc.W_B.rows() != Nd || desc.W_B.cols() != 2 * Nd)
    diags.push_back({ModelDefect::DimensionMismatch, "W_B must be Nd x 2Nd"});
  if (desc.W_C.rows() != Nd || desc.W_C.cols() != 2 * Nd)
    diags.push_back({ModelDefect::DimensionMismatch, "W_C must be Nd x 2Nd"});
  if (!diags.empty()) return diags;

  const double tol = 1e-12;
  for (int k = 1; k <= N; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;  // P_k^* = (-1)^{k+1} P_k
    const double defect = spectral_norm(Matrix(desc.P[k].transpose() - sign * desc.P[k]));
    const double scale = std::max(1.0, spectral_norm(desc.P[k]));
    if (defect > tol * scale)
      diags.push_back({ModelDefect::SymmetryViolation,
                       "P_" + std::to_string(k) + (k % 2 == 1 ? " not symmetric" : " not skew")});
  }
  {
    auto [lo, hi] = sym_part_bounds(desc.P[0]);
    const double scale = std::max(1.0, spectral_norm(desc.P[0]));
    if (hi > tol * scale)
      diags.push_back({ModelDefect::IndefiniteP0, "Re P_0 has positive eigenvalue"});
  }
  if (desc.H->self_adjoint_defect() > 1e-10)
    diags.push_back({ModelDefect::NonCoerciveH, "H(zeta) not self-adjoint on the audit grid"});
  else if (desc.H->coercivity_floor() <= 0.0)
    diags.push_back({ModelDefect::NonCoerciveH, "H(zeta) not uniformly positive on the audit grid"});
  {
    Eigen::PartialPivLU<Matrix> lu(desc.P[N]);
    const double minpiv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(minpiv > 1e-13 * std::max(1.0, spectral_norm(desc.P[N]))))
      diags.push_back({ModelDefect::SingularPN, "P_N singular to tolerance"});
  }
  {
    // invertibility of the stacked port map in common (f;e) coordinates
    const int n2 = 2 * Nd;
    Matrix stack(n2, n2);
    stack.topRows(Nd) = desc.W_B;
    stack.bottomRows(Nd) = desc.W_C * build_swap(Nd);
    const double cn = condition_number(stack.cast<Complex>());
    if (!std::isfinite(cn) || cn > 1e12)
      diags.push_back({ModelDefect::SingularPortStack, "[W_B; W_C S] singular to tolerance"});
  }
  return diags;
}

PhsModel build_model(const ModelDesc& desc) {
  auto diags = validate_model(desc);
  if (!diags.empty()) throw ModelError(std::move(diags));
  PhsModel m;
  m.desc_ = desc;
  m.Q_ = build_Q(desc.P, desc.order, desc.dim);
  m.R_ext_ = build_R(m.Q_);
  m.swap_ = build_swap(desc.order * desc.dim);
  return m;
}

std::pair<Matrix, Matrix> port_transform(const PhsModel& model) {
  return {model.Q(), model.R_ext()};
}

PortVector PhsModel::extract_ports(const Vector& trace) const {
  if (trace.size() != trace_dim())
    throw DimensionError("extract_ports: trace length must be 2Nd");
  const int Nd = port_dim();
  Vector fe = R_ext_ * trace;
  PortVector p;
  p.f = fe.head(Nd);
  p.e = fe.tail(Nd);
  p.u = desc_.W_B * fe;
  p.y = desc_.W_C * (swap_ * fe);
  return p;
}

Vector PhsModel::trace_from_flows(const Vector& f, const Vector& e) const {
  const int Nd = port_dim();
  if (f.size() != Nd || e.size() != Nd) throw DimensionError("trace_from_flows: bad sizes");
  Vector fe(2 * Nd);
  fe.head(Nd) = f;
  fe.tail(Nd) = e;
  return solve_dense(R_ext_, Matrix(fe)).col(0);
}

std::pair<Matrix, Matrix> ports_from_trace_selectors(const std::vector<Matrix>& P, int order,
                                                     int dim, const Matrix& N_B,
                                                     const Matrix& N_C) {
  const int Nd = order * dim;
  const Matrix Q = build_Q(P, order, dim);
  const Matrix R = build_R(Q);
  const Matrix S = build_swap(Nd);
  const Matrix Rinv = solve_dense(R, Matrix(Matrix::Identity(2 * Nd, 2 * Nd)));
  // u = N_B * trace = (N_B R^{-1}) (f;e),  y = N_C * trace = (N_C R^{-1} S) (e;f)
  return {N_B * Rinv, N_C * Rinv * S};
}

namespace {

// value of the j-th derivative of a polynomial with coefficient rows c (monomial basis)
Vector poly_deriv_eval(const Matrix& coef, int deriv, double z) {
  const int d = static_cast<int>(coef.rows());
  const int deg = static_cast<int>(coef.cols()) - 1;
  Vector out = Vector::Zero(d);
  for (int k = deriv; k <= deg; ++k) {
    double fac = 1.0;
    for (int j = 0; j < deriv; ++j) fac *= (k - j);
    out += coef.col(k) * (fac * std::pow(z, k - deriv));
  }
  return out;
}

// Gauss-Legendre nodes/weights on [0,1] via Golub-Welsch.
void gauss_legendre(int n, Vector& nodes, Vector& weights) {
  Matrix J = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  nodes = (es.eigenvalues().array() * 0.5 + 0.5).matrix();
  weights = (2.0 * es.eigenvectors().row(0).array().square() * 0.5).matrix();
}

}  // namespace

PassivityReport sample_passivity(const PhsModel& model, int trials, std::uint64_t seed) {
  CounterRng rng(seed, "sample-passivity");
  const int d = model.dim();
  const int N = model.order();
  const int deg = 6;
  Vector gl_nodes, gl_weights;
  gauss_legendre(16, gl_nodes, gl_weights);

  PassivityReport rep;
  rep.trials = trials;
  rep.worst_margin = -std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (int t = 0; t < trials; ++t) {
    // draw z = Hx as a random polynomial so derivatives and traces are exact
    Matrix coef(d, deg + 1);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k <= deg; ++k) coef(i, k) = rng.normal();

    // <Ax, x>_H = int (sum_k P_k z^{(k)}) . z dzeta
    double lhs = 0.0;
    for (int q = 0; q < gl_nodes.size(); ++q) {
      const double z = gl_nodes(q);
      Vector az = Vector::Zero(d);
      for (int k = 0; k <= N; ++k) az += model.P(k) * poly_deriv_eval(coef, k, z);
      lhs += gl_weights(q) * az.dot(poly_deriv_eval(coef, 0, z));
    }

    Vector trace(2 * N * d);
    for (int k = 0; k < N; ++k) {
      trace.segment(k * d, d) = poly_deriv_eval(coef, k, 1.0);
      trace.segment((N + k) * d, d) = poly_deriv_eval(coef, k, 0.0);
    }
    PortVector ports = model.extract_ports(trace);
    const double rhs = ports.u.dot(ports.y);

    scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
    rep.worst_margin = std::max(rep.worst_margin, lhs - rhs);
  }
  if (trials == 0) rep.worst_margin = 0.0;
  rep.scale = scale;
  rep.ok = rep.worst_margin <= 1e-8 * scale;
  return rep;
}

}  // namespace phsim
