#include <lnared/lyapunov.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace lnared {

Matrix solve_lyapunov(const Eigen::Ref<const Matrix>& A,
                      const Eigen::Ref<const Matrix>& Q) {
  const Index n = A.rows();
  if (A.cols() != n) throw DomainError("A must be square");
  if (Q.rows() != n || Q.cols() != n)
    throw DomainError("Q dimension mismatch in solve_lyapunov");
  if (!Q.isApprox(Q.transpose(), 1e-12))
    throw DomainError("Q must be symmetric in solve_lyapunov");

  using CMatrix = Eigen::MatrixXcd;
  Eigen::ComplexSchur<CMatrix> schur(A.cast<std::complex<double>>(),
                                     /*computeU=*/true);
  if (schur.info() != Eigen::Success)
    throw NumericalError("Schur decomposition failed");
  const CMatrix& T = schur.matrixT();
  const CMatrix& U = schur.matrixU();

  // Reject eigenvalue pairs with lambda_i + conj(lambda_j) ~ 0; the equation
  // is singular there.
  const double scale = std::max(1.0, A.norm());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (std::abs(T(i, i) + std::conj(T(j, j))) < 1e-12 * scale) {
        throw NumericalError(
            "Lyapunov equation is ill-posed: eigenvalues " +
            format_double(T(i, i).real()) + (T(i, i).imag() >= 0 ? "+" : "") +
            format_double(T(i, i).imag()) + "i and " +
            format_double(T(j, j).real()) + (T(j, j).imag() >= 0 ? "+" : "") +
            format_double(T(j, j).imag()) + "i sum to ~0");
      }
    }
  }

  // T Y + Y T^H = -U^H Q U, solved column by column from the right.
  const CMatrix Qs = U.adjoint() * Q.cast<std::complex<double>>() * U;
  CMatrix Y = CMatrix::Zero(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -Qs.col(j);
    for (Index m = j + 1; m < n; ++m) rhs -= Y.col(m) * std::conj(T(j, m));
    // (T + conj(T_jj) I) y = rhs, upper triangular back-substitution.
    CMatrix Tj = T;
    Tj.diagonal().array() += std::conj(T(j, j));
    Y.col(j) = Tj.triangularView<Eigen::Upper>().solve(rhs);
  }

  Matrix P = (U * Y * U.adjoint()).real();
  P = 0.5 * (P + P.transpose()).eval();

  const double residual = (A * P + P * A.transpose() + Q).norm();
  if (!(residual <= 1e-10 * std::max(1.0, Q.norm())))
    throw NumericalError("Lyapunov residual " + format_double(residual) +
                         " exceeds tolerance (ill-conditioned drift matrix)");
  return P;
}

MetzlerReport is_metzler(const Eigen::Ref<const Matrix>& A, double tol) {
  const Index n = A.rows();
  if (A.cols() != n) throw DomainError("A must be square");
  const double scale = A.cwiseAbs().maxCoeff();
  MetzlerReport report;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (A(i, j) < -tol * scale)
        report.violations.push_back({i, j, A(i, j)});
    }
  }
  report.metzler = report.violations.empty();
  return report;
}

double max_real_eigenvalue(const Eigen::Ref<const Matrix>& A) {
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigenvalue computation failed");
  return es.eigenvalues().real().maxCoeff();
}

double max_eigenvalue_sym(const Eigen::Ref<const Matrix>& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue_sym(const Eigen::Ref<const Matrix>& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace lnared
