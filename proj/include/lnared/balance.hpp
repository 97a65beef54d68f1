#pragma once

#include <lnared/common.hpp>

#include <span>
#include <vector>

namespace lnared {

/// Balancing transform for one reducible block:
///   T22^{-1} P22 T22^{-T} = T22^T Q22 T22 = diag(sigma),
/// with sigma sorted nonincreasing.
struct BalancedBlock {
  Matrix T22, T22_inverse;
  Vector sigma;
};

/// Contragredient balancing via Cholesky of P22 and a symmetric
/// eigendecomposition of L^T Q22 L. Both inputs must be positive definite;
/// failures report the index of the leading non-PD minor.
BalancedBlock balance_block(const Eigen::Ref<const Matrix>& P22,
                            const Eigen::Ref<const Matrix>& Q22);

/// Validates the balancing identities to the given relative tolerance;
/// throws NumericalError listing the worst defect.
void check_balanced(const BalancedBlock& bb, const Matrix& P22,
                    const Matrix& Q22, double rel_tol = 1e-8);

struct TruncationOrder {
  std::vector<Index> order;  // indices of sigma, value-descending, ties stable
  Index suggested_r = 0;     // count of entries below threshold * max(sigma)
};

/// Ranks balanced directions by magnitude; the suggested truncation count is
/// advisory (entries below `relative_threshold` times the largest value).
TruncationOrder truncation_order(const Vector& sigma,
                                 double relative_threshold = 0.01);

/// Structured Petrov-Galerkin projectors. The retained block carries exact
/// identity blocks; V^T W = I holds to 1e-10.
struct ProjectorSet {
  Matrix W, V;      // (l+k) x (l+k-r)
  Matrix W_r, V_r;  // (l+k) x r
  Index l = 0, k = 0, r = 0;
};

/// Assembles projectors from a (possibly block-assembled) T22 by selecting
/// kept and dropped columns: W22 from T22, V22 from the matching columns of
/// T22^{-T}.
ProjectorSet assemble_projectors(const Matrix& T22, const Matrix& T22_inverse,
                                 Index l, std::span<const Index> kept,
                                 std::span<const Index> dropped);

/// Standard layout: keep the first k-r balanced directions, drop the last r.
ProjectorSet build_projectors(const BalancedBlock& bb, Index l, Index r);

double biorthogonality_error(const ProjectorSet& proj);

}  // namespace lnared
