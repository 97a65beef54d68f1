#pragma once

#include <lnared/lna.hpp>
#include <lnared/lyapunov.hpp>

#include <optional>
#include <vector>

namespace lnared {

/// Partition of the reducible block: `groups` lists the reducible indices
/// (0-based within the reducible block) of each lumped region; r_per_group
/// states how many balanced directions each region gives up.
struct PartitionSpec {
  Index l = 0;
  std::vector<std::vector<Index>> groups;
  std::vector<Index> r_per_group;

  Index k() const;
  Index total_r() const;
  void validate() const;  // disjoint groups covering 0..k-1, r_g <= |g|

  static PartitionSpec two_block(Index l, Index k, Index r);
};

enum class BlockMode { two_block, per_group };

struct StructuredSolveOptions {
  double feasibility_tol = 1e-8;  // relative to the forcing-term norm
  double mu_initial = 1.0;
  double mu_factor = 0.2;
  double newton_tol = 1e-10;
  int max_outer = 200;
  int max_newton = 80;
  bool try_metzler = true;
};

struct StructuredGramians {
  Matrix P, Q;
  double margin_p = 0.0;  // -lambda_max(A P + P A^T + B B^T)
  double margin_q = 0.0;  // -lambda_max(Q A + A^T Q + C^T C)
  std::vector<std::vector<Index>> state_groups;  // over all l+k states
};

/// Diagonal solution of A P + P A^T + RHS <= 0 for Metzler Hurwitz A.
/// Candidate D = diag(xi_i / eta_i) with xi = -A^{-1} 1, eta = -A^{-T} 1,
/// verified numerically and scaled against RHS; falls back to the structured
/// solver with diagonal pattern when verification fails.
Matrix metzler_diagonal_gramian(const Eigen::Ref<const Matrix>& A,
                                const Eigen::Ref<const Matrix>& rhs);

/// Minimizes trace(P) over symmetric P supported on the given index groups
/// (block-diagonal up to ordering) subject to
///   A P + P A^T + RHS <= 0,   P >= eps I,   eps = 1e-8 ||RHS||_2,
/// by a log-det barrier path-following method with damped Newton steps.
/// Phase 1 minimizes the slack s in A P + P A^T + RHS <= s I; if the slack
/// cannot reach below zero the structure is infeasible and a NumericalError
/// reporting the best achieved slack is thrown.
Matrix solve_structured_lyap_inequality(
    const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& rhs,
    const std::vector<std::vector<Index>>& groups,
    const StructuredSolveOptions& opts = {});

/// Structured Gramian pair for a linear fluctuation system: P for the
/// reachability-side inequality with B B^T, Q for the observability side
/// with C^T C (solved as the same problem on A^T). Metzler drift matrices
/// take the diagonal fast path first.
StructuredGramians solve_structured_gramians(
    const LinearFluctuationSystem& sys, const PartitionSpec& part,
    BlockMode mode = BlockMode::per_group,
    const StructuredSolveOptions& opts = {});

}  // namespace lnared
