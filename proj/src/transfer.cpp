#include "phsim/transfer.hpp"

namespace phsim {

CMatrix assemble_companion(const PhsModel& model, Complex lambda) {
  if (lambda.real() <= 0.0)
    throw std::invalid_argument("assemble_companion: Re lambda must be > 0");
  if (!model.H().is_constant())
    throw UnsupportedFeatureError(
        "assemble_companion: nonconstant H is not supported on the continuous path; "
        "use the discrete io maps instead");
  const int N = model.order(), d = model.dim();
  const int Nd = N * d;
  CMatrix B = CMatrix::Zero(Nd, Nd);
  for (int k = 0; k + 1 < N; ++k)
    B.block(k * d, (k + 1) * d, d, d) = CMatrix::Identity(d, d);
  const Matrix Hinv = solve_dense(model.H().eval(0.0), Matrix(Matrix::Identity(d, d)));
  const Matrix PNinv = solve_dense(model.P(N), Matrix(Matrix::Identity(d, d)));
  B.block((N - 1) * d, 0, d, d) =
      PNinv.cast<Complex>() * (lambda * Hinv.cast<Complex>() - model.P(0).cast<Complex>());
  for (int k = 1; k < N; ++k)
    B.block((N - 1) * d, k * d, d, d) = (-PNinv * model.P(k)).cast<Complex>();
  return B;
}

TransferEvaluation transfer_at(const PhsModel& model, Complex lambda) {
  const int Nd = model.port_dim();
  const CMatrix B = assemble_companion(model, lambda);

  // Solution family zeta -> e^{zeta B} xi(0). Solving the boundary system in
  // the raw xi(0) coordinates mixes e^{+Re mu} and e^{-Re mu} modes and loses
  // all accuracy once ||B|| is large, so work in the modal basis with each
  // column scaled by max(1, |e^{mu_j}|); the scaling cancels in G.
  CMatrix top(Nd, Nd), bottom(Nd, Nd);
  Eigen::ComplexEigenSolver<CMatrix> es(B);
  bool modal = es.info() == Eigen::Success;
  if (modal) {
    const CMatrix& V = es.eigenvectors();
    modal = condition_number(V) < 1e8;
    if (modal) {
      for (int j = 0; j < Nd; ++j) {
        const Complex emu = std::exp(es.eigenvalues()(j));
        const double s = std::max(1.0, std::abs(emu));
        top.col(j) = V.col(j) * (emu / s);
        bottom.col(j) = V.col(j) / s;
      }
    }
  }
  if (!modal) {  // defective companion: fall back to the direct parametrization
    top = mat_exp(B);
    bottom = CMatrix::Identity(Nd, Nd);
  }
  CMatrix EI(2 * Nd, Nd);
  EI.topRows(Nd) = top;
  EI.bottomRows(Nd) = bottom;

  const CMatrix R = model.R_ext().cast<Complex>();
  const CMatrix MB = model.W_B().cast<Complex>() * R * EI;
  const CMatrix MC = model.W_C().cast<Complex>() * model.swap().cast<Complex>() * R * EI;

  TransferEvaluation ev;
  ev.lambda = lambda;
  {  // diagnostic: condition number of the unscaled boundary system
    CMatrix EI_raw(2 * Nd, Nd);
    EI_raw.topRows(Nd) = modal ? CMatrix(mat_exp(B)) : top;
    EI_raw.bottomRows(Nd) = CMatrix::Identity(Nd, Nd);
    ev.boundary_system_condition =
        condition_number(CMatrix(model.W_B().cast<Complex>() * R * EI_raw));
  }
  CMatrix Xi;
  try {
    Xi = solve_dense(MB, CMatrix(CMatrix::Identity(Nd, Nd)));
  } catch (const SingularMatrixError&) {
    throw NotPassiveAtLambdaError("transfer_at: boundary system singular; model is not "
                                  "impedance passive at this lambda");
  }
  ev.G = MC * Xi;
  ev.min_sym_eig = sym_part_bounds(ev.G).first;
  return ev;
}

PositivityScan scan_positivity(const PhsModel& model, std::span<const Complex> grid) {
  PositivityScan scan;
  scan.min_over_grid = std::numeric_limits<double>::infinity();
  for (const Complex& lam : grid) {
    const auto ev = transfer_at(model, lam);
    scan.rows.push_back({lam, ev.min_sym_eig});
    scan.min_over_grid = std::min(scan.min_over_grid, ev.min_sym_eig);
    if (ev.min_sym_eig <= 0.0) scan.all_positive = false;
  }
  if (scan.rows.empty()) scan.min_over_grid = 0.0;
  return scan;
}

}  // namespace phsim
