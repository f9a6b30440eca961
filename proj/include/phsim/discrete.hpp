#pragma once

#include <memory>

#include "phsim/model.hpp"

namespace phsim {

struct Grid {
  int n_cells = 0;
  int nodes() const { return n_cells + 1; }
  double dz() const { return 1.0 / n_cells; }
  double node(int j) const { return static_cast<double>(j) / n_cells; }
  /// Trapezoid weights (1/2, 1, ..., 1, 1/2) * dz; they sum to 1.
  Vector weights() const;
};

/// Structure-preserving spatial discretization on the SBP pair
/// (D1, w): interior central differences, one-sided boundary rows.
/// The boundary rows of D1 are reused for the (Hx)' traces, and ports are
/// imposed weakly through the energy-adjoint of the output map, so the
/// discrete power balance holds to round-off.
class DiscreteSystem {
public:
  const Grid& grid() const { return grid_; }
  const PhsModel& model() const { return *model_; }
  std::shared_ptr<const PhsModel> model_ptr() const { return model_; }
  int state_dim() const { return grid_.nodes() * model_->dim(); }

  const Matrix& D1() const { return D1_; }
  const Matrix& generator() const { return A_; }       // free generator + dissipation
  const Matrix& trace_op() const { return T_; }        // 2Nd x state_dim, traces of Hx
  const Matrix& input_op() const { return U_; }        // u(x) = W_B R T x
  const Matrix& output_op() const { return Y_; }       // y(x) = W_C S R T x
  const Matrix& H_node(int j) const { return H_nodes_[j]; }
  double dissipation() const { return dissipation_; }

  Vector apply_mass(const Vector& x) const;
  Vector apply_mass_inv(const Vector& x) const;
  double energy_inner(const Vector& a, const Vector& b) const;
  double energy_norm(const Vector& x) const;
  double energy(const Vector& x) const { return 0.5 * energy_inner(x, x); }

  /// Nodewise z = Hx.
  Vector apply_H(const Vector& x) const;
  /// -sum_j w_j z_j . (Re P0) z_j >= 0 (internal P0 dissipation).
  double p0_gap(const Vector& x) const;
  /// eps ||S x||_w^2 >= 0 (artificial dissipation power, 0 when disabled).
  double dissipation_gap(const Vector& x) const;
  double internal_gap(const Vector& x) const { return p0_gap(x) + dissipation_gap(x); }

  /// Worst residual of the SBP identity <D1 a, b>_w + <a, D1 b>_w = a_n.b_n - a_0.b_0
  /// over random vector pairs.
  double sbp_residual(int trials, std::uint64_t seed) const;

  friend DiscreteSystem build_discrete(std::shared_ptr<const PhsModel> model, int n_cells,
                                       double dissipation);

private:
  DiscreteSystem() = default;
  Grid grid_;
  std::shared_ptr<const PhsModel> model_;
  Matrix D1_, A_, T_, U_, Y_, Adis_;
  std::vector<Matrix> H_nodes_, H_inv_nodes_;
  Vector w_;
  double dissipation_ = 0.0;
  Matrix dis_stencil_;  // undivided second difference, for the gap
};

/// Assembles the discrete system; verifies the SBP identity at build time.
/// `dissipation` adds -(c/dz) M^{-1} S^T W S (symmetric negative semidefinite
/// in the energy inner product; default off).
DiscreteSystem build_discrete(std::shared_ptr<const PhsModel> model, int n_cells,
                              double dissipation = 0.0);

/// (lhs, rhs) = (Re<A_h x, x>_h, Re<u(x), y(x)>) for the free generator
/// (artificial dissipation excluded from lhs).
std::pair<double, double> discrete_power_balance(const DiscreteSystem& sys, const Vector& x);

class FactorizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense maps for the stationary problem (I - tau A)x = f with weak port input
/// u: x = Phi f + Psi u, y = F f + G u. Re G is positive definite (reported).
class DiscreteIoMaps {
public:
  DiscreteIoMaps(std::shared_ptr<const DiscreteSystem> sys, double tau);

  double tau() const { return tau_; }
  const DiscreteSystem& system() const { return *sys_; }
  std::shared_ptr<const DiscreteSystem> system_ptr() const { return sys_; }

  Vector apply_Phi(const Vector& f) const;   // K^{-1} f
  Vector apply_F(const Vector& f) const;     // Y K^{-1} f
  const Matrix& Psi() const { return Psi_; }
  const Matrix& G() const { return G_; }
  const Matrix& G_inv() const { return G_inv_; }

  double re_G_floor() const { return re_G_floor_; }          // lambda_min Re G
  double re_G_inv_floor() const { return re_G_inv_floor_; }  // lambda_min Re G^{-1}
  /// Constant forward-backward step (minimizer of ||I - alpha G^{-1}||,
  /// safeguarded by m/||G^{-1}||^2) and the resulting contraction factor.
  double fb_step() const { return fb_step_; }
  double fb_factor() const { return fb_factor_; }
  double G_inv_norm() const { return G_inv_norm_; }

private:
  std::shared_ptr<const DiscreteSystem> sys_;
  double tau_;
  Eigen::PartialPivLU<Matrix> K_lu_;
  Matrix Psi_, G_, G_inv_;
  double re_G_floor_ = 0.0, re_G_inv_floor_ = 0.0;
  double fb_step_ = 0.0, fb_factor_ = 1.0, G_inv_norm_ = 0.0;
};

DiscreteIoMaps discrete_io_maps(std::shared_ptr<const DiscreteSystem> sys, double tau);

}  // namespace phsim
