#pragma once

#include <span>
#include <vector>

#include "phsim/model.hpp"

namespace phsim {

class UnsupportedFeatureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NotPassiveAtLambdaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TransferEvaluation {
  Complex lambda;
  CMatrix G;                          // Nd x Nd
  double min_sym_eig = 0.0;           // smallest eigenvalue of Re G(lambda)
  double boundary_system_condition = 0.0;  // cond_2 of W_B R_ext [E_lambda; I]
};

/// Block companion matrix B_lambda of the stationary ODE with constant H folded
/// in (z = Hx). Requires Re lambda > 0 and constant H.
CMatrix assemble_companion(const PhsModel& model, Complex lambda);

/// Transfer function G(lambda) by solving the boundary system for basis inputs.
TransferEvaluation transfer_at(const PhsModel& model, Complex lambda);

struct PositivityScan {
  struct Row {
    Complex lambda;
    double min_sym_eig;
  };
  std::vector<Row> rows;
  bool all_positive = true;
  double min_over_grid = 0.0;
};

PositivityScan scan_positivity(const PhsModel& model, std::span<const Complex> grid);

}  // namespace phsim
