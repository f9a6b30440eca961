#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace phsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Thrown by solve_dense when a pivot falls below the singularity tolerance.
class SingularMatrixError : public std::runtime_error {
public:
  SingularMatrixError(int pivot, double magnitude, double tol)
      : std::runtime_error("matrix is singular to tolerance: pivot " + std::to_string(pivot) +
                           " has magnitude " + std::to_string(magnitude) + " < " + std::to_string(tol)),
        pivot_index(pivot) {}
  int pivot_index;
};

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// e^A by scaling-and-squaring with the order-13 Padé approximant.
/// Relative error <= 1e-12 for ||A|| <= 50.
Matrix mat_exp(const Matrix& A);
CMatrix mat_exp(const CMatrix& A);

/// X with A X = B via partial-pivot LU. Throws SingularMatrixError when the
/// smallest pivot drops below 1e-13 * ||A||, naming the pivot index.
Matrix solve_dense(const Matrix& A, const Matrix& B);
CMatrix solve_dense(const CMatrix& A, const CMatrix& B);

/// Extremal eigenvalues (min, max) of the symmetric part (A + A*)/2.
std::pair<double, double> sym_part_bounds(const Matrix& A);
std::pair<double, double> sym_part_bounds(const CMatrix& A);

/// Spectral norm (largest singular value), via the symmetric eigenproblem on A*A.
double spectral_norm(const Matrix& A);
double spectral_norm(const CMatrix& A);

/// 2-norm condition number via SVD.
double condition_number(const CMatrix& A);

}  // namespace phsim
