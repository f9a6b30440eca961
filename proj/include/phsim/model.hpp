#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phsim/densekit.hpp"

namespace phsim {

/// Scalar coefficient profile over [0,1] with a closed-form derivative.
struct ScalarProfile {
  enum class Kind { Constant, Affine, Exponential };  // c; a + b*zeta; a*exp(b*zeta)
  Kind kind = Kind::Constant;
  double a = 1.0, b = 0.0;

  static ScalarProfile constant(double c) { return {Kind::Constant, c, 0.0}; }
  static ScalarProfile affine(double a, double b) { return {Kind::Affine, a, b}; }
  static ScalarProfile exponential(double a, double b) { return {Kind::Exponential, a, b}; }

  double eval(double z) const;
  double deriv(double z) const;
};

/// Hamiltonian density H(zeta): constant matrix, per-node sample table over
/// [0,1] (piecewise linear in zeta), or a diagonal of named analytic profiles.
class Hamiltonian {
public:
  enum class Kind { Constant, Table, DiagProfiles };

  static Hamiltonian constant(Matrix H);
  static Hamiltonian table(std::vector<Matrix> nodes);
  static Hamiltonian diag_profiles(std::vector<ScalarProfile> entries);

  Kind kind() const { return kind_; }
  int dim() const { return d_; }
  bool is_constant() const { return kind_ == Kind::Constant; }

  Matrix eval(double zeta) const;
  Matrix deriv(double zeta) const;  // piecewise slope for tables, closed form otherwise

  /// min over the audit grid of lambda_min(H(zeta)); > 0 required for coercivity.
  double coercivity_floor(int audit_points = 1024) const;
  /// max over the audit grid of ||H(zeta)|| deviation from self-adjointness.
  double self_adjoint_defect(int audit_points = 1024) const;

private:
  Hamiltonian(Kind k, int d) : kind_(k), d_(d) {}
  Kind kind_;
  int d_;
  Matrix constant_;
  std::vector<Matrix> table_;
  std::vector<ScalarProfile> profiles_;
};

enum class ModelDefect {
  DimensionMismatch,
  SymmetryViolation,   // P_k^* != (-1)^{k+1} P_k
  IndefiniteP0,        // Re P_0 not <= 0
  NonCoerciveH,
  SingularPN,
  SingularPortStack,   // [W_B; W_C S] not invertible
};

std::string to_string(ModelDefect d);

struct ModelDiagnostic {
  ModelDefect defect;
  std::string detail;
};

class ModelError : public std::runtime_error {
public:
  ModelError(std::vector<ModelDiagnostic> diags);
  const std::vector<ModelDiagnostic>& diagnostics() const { return diags_; }
  bool has(ModelDefect d) const;

private:
  std::vector<ModelDiagnostic> diags_;
};

/// Raw description of the system: order N in {1,2}, dimension d,
/// matrices P_0..P_N, density H, and port matrices W_B, W_C (Nd x 2Nd).
struct ModelDesc {
  int order = 1;
  int dim = 0;
  std::vector<Matrix> P;  // P[0..order]
  std::optional<Hamiltonian> H;
  Matrix W_B, W_C;
};

struct PortVector {
  Vector f, e;  // boundary flow / effort, each R^{Nd}
  Vector u, y;  // u = W_B (f;e), y = W_C (e;f)
};

/// Validated immutable port-Hamiltonian model.
class PhsModel {
public:
  int order() const { return desc_.order; }
  int dim() const { return desc_.dim; }
  int port_dim() const { return desc_.order * desc_.dim; }    // Nd
  int trace_dim() const { return 2 * port_dim(); }
  const Matrix& P(int k) const { return desc_.P.at(k); }
  const Hamiltonian& H() const { return *desc_.H; }
  const Matrix& W_B() const { return desc_.W_B; }
  const Matrix& W_C() const { return desc_.W_C; }

  const Matrix& Q() const { return Q_; }
  const Matrix& R_ext() const { return R_ext_; }
  const Matrix& swap() const { return swap_; }  // (f;e) -> (e;f)

  /// Ports from the boundary trace stack ((Hx)(1)..(Hx)^{(N-1)}(1), (Hx)(0)..).
  PortVector extract_ports(const Vector& trace) const;
  /// Trace stack back from (f, e) through R_ext^{-1}.
  Vector trace_from_flows(const Vector& f, const Vector& e) const;

  friend PhsModel build_model(const ModelDesc&);

private:
  PhsModel() = default;
  ModelDesc desc_;
  Matrix Q_, R_ext_, swap_;
};

/// Non-throwing validation; empty result means the description is admissible.
std::vector<ModelDiagnostic> validate_model(const ModelDesc& desc);

/// Validates eagerly; throws ModelError carrying all failed invariants.
PhsModel build_model(const ModelDesc& desc);

/// (Q, R_ext) per the block formula of the boundary-port transform.
std::pair<Matrix, Matrix> port_transform(const PhsModel& model);

/// Build W_B, W_C from selectors acting on the raw trace stack, so that
/// u = N_B * trace and y = N_C * trace.
std::pair<Matrix, Matrix> ports_from_trace_selectors(const std::vector<Matrix>& P, int order,
                                                     int dim, const Matrix& N_B,
                                                     const Matrix& N_C);

struct PassivityReport {
  bool ok = true;
  double worst_margin = 0.0;  // max over trials of <Ax,x>_H - Re<u,y>, scaled
  double scale = 1.0;
  int trials = 0;
};

/// Random degree-<=6 polynomial states; integrates Re<Ax,x>_H with Gauss-Legendre
/// quadrature and checks it against Re<u,y> from the boundary ports.
PassivityReport sample_passivity(const PhsModel& model, int trials, std::uint64_t seed);

}  // namespace phsim
