#pragma once

#include <lnared/common.hpp>

#include <vector>

namespace lnared {

/// Solves A P + P A^T + Q = 0 for symmetric P (continuous-time Lyapunov
/// equation) by complex Schur reduction and triangular back-substitution.
/// Requires the spectrum of A to be free of eigenvalue pairs summing to zero
/// (guaranteed for Hurwitz A); otherwise throws NumericalError with the
/// offending eigenvalues. The result satisfies
///   ||A P + P A^T + Q||_F <= 1e-10 * max(1, ||Q||_F).
Matrix solve_lyapunov(const Eigen::Ref<const Matrix>& A,
                      const Eigen::Ref<const Matrix>& Q);

struct MetzlerViolation {
  Index row, col;
  double value;
};

struct MetzlerReport {
  bool metzler = false;
  std::vector<MetzlerViolation> violations;
};

/// A matrix is Metzler when all off-diagonal entries are nonnegative
/// (within -tol * max|A| numerically). Violating entries are listed.
MetzlerReport is_metzler(const Eigen::Ref<const Matrix>& A,
                         double tol = 1e-12);

/// Largest real part over the spectrum of A (negative iff A is Hurwitz).
double max_real_eigenvalue(const Eigen::Ref<const Matrix>& A);

/// Extreme eigenvalues of a symmetric matrix.
double max_eigenvalue_sym(const Eigen::Ref<const Matrix>& S);
double min_eigenvalue_sym(const Eigen::Ref<const Matrix>& S);

}  // namespace lnared
