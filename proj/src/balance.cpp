#include <lnared/balance.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lnared {

namespace {

// Cholesky that reports the failing pivot index.
Matrix cholesky_or_report(const Eigen::Ref<const Matrix>& S,
                          const char* which) {
  const Index n = S.rows();
  Matrix L = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = S(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > 0.0))
      throw NumericalError(std::string(which) +
                           " is not positive definite (leading minor " +
                           std::to_string(j + 1) + ")");
    L(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      L(i, j) =
          (S(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
  }
  return L;
}

}  // namespace

BalancedBlock balance_block(const Eigen::Ref<const Matrix>& P22,
                            const Eigen::Ref<const Matrix>& Q22) {
  const Index k = P22.rows();
  if (P22.cols() != k || Q22.rows() != k || Q22.cols() != k)
    throw DomainError("balance_block needs square blocks of equal size");

  BalancedBlock bb;
  if (k == 0) {
    bb.T22.resize(0, 0);
    bb.T22_inverse.resize(0, 0);
    bb.sigma.resize(0);
    return bb;
  }

  const Matrix L = cholesky_or_report(P22, "P22");
  const Matrix M = L.transpose() * Q22 * L;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed in balance_block");

  // Stable descending reorder of the eigenpairs (ties keep solver order).
  const Vector lam_asc = es.eigenvalues();
  if (!(lam_asc.minCoeff() > 0.0))
    throw NumericalError("Q22 is not positive definite (smallest eigenvalue " +
                         format_double(lam_asc.minCoeff()) +
                         " after whitening)");
  std::vector<Index> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return lam_asc[a] > lam_asc[b];
  });
  Vector lam(k);
  Matrix U(k, k);
  for (Index i = 0; i < k; ++i) {
    lam[i] = lam_asc[order[static_cast<size_t>(i)]];
    U.col(i) = es.eigenvectors().col(order[static_cast<size_t>(i)]);
  }

  bb.sigma = lam.cwiseSqrt();
  const Vector scale = bb.sigma.cwiseSqrt();  // sigma^{1/2}
  bb.T22 = L * U * scale.cwiseInverse().asDiagonal();
  // T22^{-1} = sigma^{1/2} U^T L^{-1}, via a triangular solve.
  const Matrix Linv =
      L.triangularView<Eigen::Lower>().solve(Matrix::Identity(k, k));
  bb.T22_inverse = scale.asDiagonal() * U.transpose() * Linv;
  return bb;
}

void check_balanced(const BalancedBlock& bb, const Matrix& P22,
                    const Matrix& Q22, double rel_tol) {
  const double sig_norm = bb.sigma.norm();
  const Matrix Sigma = bb.sigma.asDiagonal();
  const double err_p =
      (bb.T22_inverse * P22 * bb.T22_inverse.transpose() - Sigma).norm();
  const double err_q = (bb.T22.transpose() * Q22 * bb.T22 - Sigma).norm();
  if (err_p > rel_tol * sig_norm || err_q > rel_tol * sig_norm)
    throw NumericalError("balancing identities violated (errors " +
                         format_double(err_p) + ", " + format_double(err_q) +
                         " vs scale " + format_double(sig_norm) + ")");
  for (Index i = 1; i < bb.sigma.size(); ++i)
    if (bb.sigma[i] > bb.sigma[i - 1] * (1.0 + 1e-12))
      throw NumericalError("balanced values are not sorted nonincreasing");
}

TruncationOrder truncation_order(const Vector& sigma,
                                 double relative_threshold) {
  if ((sigma.array() <= 0.0).any())
    throw DomainError("balanced values must be positive");
  TruncationOrder out;
  out.order.resize(static_cast<size_t>(sigma.size()));
  std::iota(out.order.begin(), out.order.end(), Index{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](Index a, Index b) { return sigma[a] > sigma[b]; });
  const double cutoff = relative_threshold * sigma.maxCoeff();
  out.suggested_r = (sigma.array() < cutoff).count();
  return out;
}

ProjectorSet assemble_projectors(const Matrix& T22, const Matrix& T22_inverse,
                                 Index l, std::span<const Index> kept,
                                 std::span<const Index> dropped) {
  const Index k = T22.rows();
  const Index r = static_cast<Index>(dropped.size());
  if (static_cast<Index>(kept.size()) + r != k)
    throw DomainError("kept/dropped columns must partition the block");

  ProjectorSet proj;
  proj.l = l;
  proj.k = k;
  proj.r = r;
  const Index m = l + k - r;

  proj.W = Matrix::Zero(l + k, m);
  proj.V = Matrix::Zero(l + k, m);
  proj.W.topLeftCorner(l, l).setIdentity();
  proj.V.topLeftCorner(l, l).setIdentity();
  for (Index j = 0; j < k - r; ++j) {
    proj.W.col(l + j).tail(k) = T22.col(kept[static_cast<size_t>(j)]);
    proj.V.col(l + j).tail(k) =
        T22_inverse.row(kept[static_cast<size_t>(j)]).transpose();
  }
  proj.W_r = Matrix::Zero(l + k, r);
  proj.V_r = Matrix::Zero(l + k, r);
  for (Index j = 0; j < r; ++j) {
    proj.W_r.col(j).tail(k) = T22.col(dropped[static_cast<size_t>(j)]);
    proj.V_r.col(j).tail(k) =
        T22_inverse.row(dropped[static_cast<size_t>(j)]).transpose();
  }

  const double err = biorthogonality_error(proj);
  if (err > 1e-10)
    throw NumericalError("projector biorthogonality error " +
                         format_double(err) + " exceeds 1e-10");
  return proj;
}

ProjectorSet build_projectors(const BalancedBlock& bb, Index l, Index r) {
  const Index k = bb.T22.rows();
  if (r < 0 || r > k)
    throw DomainError("truncation count r must satisfy 0 <= r <= " +
                      std::to_string(k));
  std::vector<Index> kept, dropped;
  for (Index i = 0; i < k - r; ++i) kept.push_back(i);
  for (Index i = k - r; i < k; ++i) dropped.push_back(i);
  return assemble_projectors(bb.T22, bb.T22_inverse, l, kept, dropped);
}

double biorthogonality_error(const ProjectorSet& proj) {
  const Index m = proj.W.cols();
  double err = (proj.V.transpose() * proj.W - Matrix::Identity(m, m))
                   .cwiseAbs()
                   .maxCoeff();
  if (proj.r > 0) {
    err = std::max(err,
                   (proj.V_r.transpose() * proj.W).cwiseAbs().maxCoeff());
    err = std::max(err,
                   (proj.V.transpose() * proj.W_r).cwiseAbs().maxCoeff());
    err = std::max(
        err, (proj.V_r.transpose() * proj.W_r - Matrix::Identity(proj.r, proj.r))
                 .cwiseAbs()
                 .maxCoeff());
  }
  return err;
}

}  // namespace lnared
