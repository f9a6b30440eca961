#include "phsim/densekit.hpp"

#include <cmath>

namespace phsim {
namespace {

template <typename Mat>
void require_square(const Mat& A, const char* who) {
  if (A.rows() != A.cols())
    throw DimensionError(std::string(who) + ": matrix must be square, got " +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  if (!A.allFinite())
    throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

// Order-13 Padé numerator/denominator split, U odd part, V even part.
template <typename Mat>
void pade13(const Mat& A, Mat& U, Mat& V) {
  static const double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                             1187353796428800.,  129060195264000.,   10559470521600.,
                             670442572800.,      33522128640.,       1323241920.,
                             40840800.,          960960.,            16380.,
                             182.,               1.};
  const auto n = A.rows();
  const Mat I = Mat::Identity(n, n);
  const Mat A2 = A * A;
  const Mat A4 = A2 * A2;
  const Mat A6 = A4 * A2;
  Mat tmp = A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2);
  tmp += b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I;
  U = A * tmp;
  V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2);
  V += b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
}

template <typename Mat>
Mat mat_exp_impl(const Mat& A) {
  require_square(A, "mat_exp");
  const auto n = A.rows();
  if (n == 0) return A;
  const double l1 = A.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(l1) || l1 > 1e8)
    throw std::range_error("mat_exp: norm out of range (" + std::to_string(l1) + ")");
  const double theta13 = 5.371920351148152;
  int squarings = 0;
  Mat As = A;
  if (l1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(l1 / theta13)));
    As = A * std::ldexp(1.0, -squarings);
  }
  Mat U, V;
  pade13(As, U, V);
  Mat numer = V + U;
  Mat denom = V - U;
  Mat E = denom.partialPivLu().solve(numer);
  for (int k = 0; k < squarings; ++k) E = E * E;
  return E;
}

template <typename Mat>
Mat solve_dense_impl(const Mat& A, const Mat& B) {
  require_square(A, "solve_dense");
  if (A.rows() != B.rows())
    throw DimensionError("solve_dense: rhs has " + std::to_string(B.rows()) +
                         " rows, expected " + std::to_string(A.rows()));
  Eigen::PartialPivLU<Mat> lu(A);
  const double tol = 1e-13 * std::max(spectral_norm(A), 1e-300);
  const auto diag = lu.matrixLU().diagonal();
  for (int i = 0; i < diag.size(); ++i) {
    const double p = std::abs(diag(i));
    if (p < tol) throw SingularMatrixError(i, p, tol);
  }
  return lu.solve(B);
}

}  // namespace

Matrix mat_exp(const Matrix& A) { return mat_exp_impl(A); }
CMatrix mat_exp(const CMatrix& A) { return mat_exp_impl(A); }

Matrix solve_dense(const Matrix& A, const Matrix& B) { return solve_dense_impl(A, B); }
CMatrix solve_dense(const CMatrix& A, const CMatrix& B) { return solve_dense_impl(A, B); }

std::pair<double, double> sym_part_bounds(const Matrix& A) {
  require_square(A, "sym_part_bounds");
  Matrix S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

std::pair<double, double> sym_part_bounds(const CMatrix& A) {
  require_square(A, "sym_part_bounds");
  CMatrix S = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

double spectral_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Matrix G = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double spectral_norm(const CMatrix& A) {
  if (A.size() == 0) return 0.0;
  CMatrix G = A.adjoint() * A;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double condition_number(const CMatrix& A) {
  Eigen::JacobiSVD<CMatrix> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

}  // namespace phsim
