#include <lnared/gramians.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace lnared {

Index PartitionSpec::k() const {
  Index total = 0;
  for (const auto& g : groups) total += static_cast<Index>(g.size());
  return total;
}

Index PartitionSpec::total_r() const {
  Index total = 0;
  for (Index r : r_per_group) total += r;
  return total;
}

void PartitionSpec::validate() const {
  if (l < 1) throw DomainError("partition must retain at least one state");
  if (groups.size() != r_per_group.size())
    throw DomainError("one truncation count per group required");
  std::set<Index> seen;
  for (size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw DomainError("empty lumped group");
    for (Index idx : groups[g]) {
      if (idx < 0 || !seen.insert(idx).second)
        throw DomainError("groups must be disjoint reducible indices");
    }
    if (r_per_group[g] < 0 ||
        r_per_group[g] > static_cast<Index>(groups[g].size()))
      throw DomainError("group truncation count out of range");
  }
  const Index kk = k();
  for (Index i = 0; i < kk; ++i)
    if (!seen.count(i))
      throw DomainError("groups must cover every reducible index");
}

PartitionSpec PartitionSpec::two_block(Index l, Index k, Index r) {
  PartitionSpec part;
  part.l = l;
  if (k > 0) {
    part.groups.emplace_back();
    for (Index i = 0; i < k; ++i) part.groups.back().push_back(i);
    part.r_per_group.push_back(r);
  } else if (r != 0) {
    throw DomainError("cannot truncate from an empty reducible block");
  }
  return part;
}

namespace {

// Symmetric basis element for entry (a, b) of an n x n matrix.
Matrix basis_element(Index n, Index a, Index b) {
  Matrix E = Matrix::Zero(n, n);
  E(a, b) += 1.0;
  if (a != b) E(b, a) += 1.0;
  return E;
}

struct Pattern {
  Index n = 0;
  std::vector<std::pair<Index, Index>> entries;  // (a, b), a <= b

  static Pattern from_groups(Index n, const std::vector<std::vector<Index>>& groups) {
    Pattern pat;
    pat.n = n;
    std::vector<bool> covered(static_cast<size_t>(n), false);
    for (const auto& g : groups) {
      for (size_t i = 0; i < g.size(); ++i) {
        if (g[i] < 0 || g[i] >= n)
          throw DomainError("group index out of range");
        if (covered[static_cast<size_t>(g[i])])
          throw DomainError("groups must be disjoint");
        covered[static_cast<size_t>(g[i])] = true;
        for (size_t j = i; j < g.size(); ++j) {
          const Index a = std::min(g[i], g[j]);
          const Index b = std::max(g[i], g[j]);
          pat.entries.emplace_back(a, b);
        }
      }
    }
    for (bool c : covered)
      if (!c) throw DomainError("groups must cover every state index");
    std::sort(pat.entries.begin(), pat.entries.end());
    return pat;
  }

  Matrix assemble(const Vector& theta) const {
    Matrix P = Matrix::Zero(n, n);
    for (size_t i = 0; i < entries.size(); ++i) {
      const auto [a, b] = entries[i];
      P(a, b) = theta[static_cast<Index>(i)];
      P(b, a) = theta[static_cast<Index>(i)];
    }
    return P;
  }

  Vector project(const Matrix& P) const {
    Vector theta(static_cast<Index>(entries.size()));
    for (size_t i = 0; i < entries.size(); ++i)
      theta[static_cast<Index>(i)] = P(entries[i].first, entries[i].second);
    return theta;
  }
};

// Barrier machinery for one semidefinite constraint G(theta) >= 0 with
// G affine in theta: G = G0 + sum_i theta_i D_i.
struct AffineConstraint {
  Matrix G0;
  std::vector<Matrix> D;

  Matrix value(const Vector& theta) const {
    Matrix G = G0;
    for (size_t i = 0; i < D.size(); ++i) G += theta[static_cast<Index>(i)] * D[i];
    return G;
  }

  // Returns false when G(theta) is not strictly positive definite.
  bool barrier(const Vector& theta, double& phi, Vector* grad,
               Matrix* hess) const {
    const Matrix G = value(theta);
    Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return false;
    const double lam_min = es.eigenvalues().minCoeff();
    if (!(lam_min > 0.0)) return false;
    Eigen::LLT<Matrix> llt(G);
    if (llt.info() != Eigen::Success) return false;
    double logdet = 0.0;
    for (Index i = 0; i < G.rows(); ++i)
      logdet += std::log(llt.matrixLLT()(i, i));
    phi = -2.0 * logdet;
    if (!grad && !hess) return true;
    const Matrix Ginv = llt.solve(Matrix::Identity(G.rows(), G.cols()));
    const size_t p = D.size();
    std::vector<Matrix> M(p);
    for (size_t i = 0; i < p; ++i) M[i] = Ginv * D[i];
    if (grad) {
      grad->resize(static_cast<Index>(p));
      for (size_t i = 0; i < p; ++i)
        (*grad)[static_cast<Index>(i)] = -M[i].trace();
    }
    if (hess) {
      hess->resize(static_cast<Index>(p), static_cast<Index>(p));
      for (size_t i = 0; i < p; ++i) {
        for (size_t j = i; j < p; ++j) {
          const double h = (M[i].array() * M[j].transpose().array()).sum();
          (*hess)(static_cast<Index>(i), static_cast<Index>(j)) = h;
          (*hess)(static_cast<Index>(j), static_cast<Index>(i)) = h;
        }
      }
    }
    return true;
  }
};

// Minimizes c^T theta subject to the given semidefinite constraints using a
// log-det barrier path: for decreasing mu, damped Newton on
//   f_mu(theta) = c^T theta / mu + sum_constraints -log det G(theta).
// theta0 must be strictly feasible. `scale` sets the absolute stopping level
// of the path parameter; `early_stop`, when given, is consulted after every
// accepted Newton step.
Vector barrier_minimize(const Vector& c,
                        const std::vector<AffineConstraint>& constraints,
                        Vector theta0, const StructuredSolveOptions& opts,
                        double scale,
                        const std::function<bool(const Vector&)>& early_stop) {
  const Index p = c.size();
  Vector theta = std::move(theta0);

  auto total_barrier = [&](const Vector& th, double& phi, Vector* g,
                           Matrix* H) {
    phi = 0.0;
    if (g) g->setZero(p);
    if (H) H->setZero(p, p);
    for (const auto& con : constraints) {
      double phi_c;
      Vector g_c;
      Matrix H_c;
      if (!con.barrier(th, phi_c, g ? &g_c : nullptr, H ? &H_c : nullptr))
        return false;
      phi += phi_c;
      if (g) *g += g_c;
      if (H) *H += H_c;
    }
    return true;
  };

  {
    double phi;
    if (!total_barrier(theta, phi, nullptr, nullptr))
      throw NumericalError("barrier start point is not strictly feasible");
  }
  if (early_stop && early_stop(theta)) return theta;

  double total_rows = 0.0;
  for (const auto& con : constraints)
    total_rows += static_cast<double>(con.G0.rows());

  double mu = opts.mu_initial * std::max(1.0, scale);
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    for (int inner = 0; inner < opts.max_newton; ++inner) {
      double phi;
      Vector g;
      Matrix H;
      if (!total_barrier(theta, phi, &g, &H))
        throw NumericalError("barrier iterate left the feasible cone");
      Vector grad = c / mu + g;
      H.diagonal().array() += 1e-12 * (1.0 + H.trace());
      Eigen::LDLT<Matrix> ldlt(H);
      Vector step = ldlt.solve(-grad);
      const double decrement2 = -grad.dot(step);
      if (!(decrement2 > 0.0)) break;
      if (decrement2 * 0.5 < opts.newton_tol) break;

      const double f0 = c.dot(theta) / mu + phi;
      double alpha = 1.0;
      bool moved = false;
      for (int h = 0; h < 60; ++h) {
        const Vector trial = theta + alpha * step;
        double phi_t;
        if (total_barrier(trial, phi_t, nullptr, nullptr)) {
          const double f_t = c.dot(trial) / mu + phi_t;
          if (f_t <= f0 - 0.25 * alpha * decrement2) {
            theta = trial;
            moved = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      if (early_stop && early_stop(theta)) return theta;
    }
    if (mu * total_rows < 1e-8 * std::max(1.0, scale)) break;
    mu *= opts.mu_factor;
  }
  return theta;
}

double spectral_norm_psd(const Eigen::Ref<const Matrix>& S) {
  return std::max(0.0, max_eigenvalue_sym(S));
}

}  // namespace

Matrix metzler_diagonal_gramian(const Eigen::Ref<const Matrix>& A,
                                const Eigen::Ref<const Matrix>& rhs) {
  const Index n = A.rows();
  if (A.cols() != n) throw DomainError("A must be square");
  if (rhs.rows() != n || rhs.cols() != n)
    throw DomainError("RHS dimension mismatch");
  const MetzlerReport rep = is_metzler(A);
  if (!rep.metzler)
    throw DomainError("drift matrix is not Metzler (" +
                      std::to_string(rep.violations.size()) +
                      " negative off-diagonal entries)");
  const double max_re = max_real_eigenvalue(A);
  if (!(max_re < 0.0))
    throw DomainError("drift matrix is not Hurwitz (max Re eigenvalue " +
                      format_double(max_re) + ")");

  const Vector ones = Vector::Ones(n);
  Eigen::PartialPivLU<Matrix> lu(A);
  const Vector xi = -lu.solve(ones);
  Eigen::PartialPivLU<Matrix> lut(A.transpose());
  const Vector eta = -lut.solve(ones);

  bool candidate_ok = (xi.array() > 0.0).all() && (eta.array() > 0.0).all();
  Matrix D;
  if (candidate_ok) {
    D = (xi.array() / eta.array()).matrix().asDiagonal();
    const Matrix M = A * D + D * A.transpose();
    candidate_ok = max_eigenvalue_sym(M) < 0.0;
  }
  if (!candidate_ok) {
    // Verification failed; hand the diagonal pattern to the general solver.
    std::vector<std::vector<Index>> groups;
    for (Index i = 0; i < n; ++i) groups.push_back({i});
    return solve_structured_lyap_inequality(A, rhs, groups);
  }

  const Matrix M = A * D + D * A.transpose();
  const double lam_rhs = spectral_norm_psd(rhs);
  const double lam_neg = -max_eigenvalue_sym(M);
  const double alpha = std::max(1.0, lam_rhs / lam_neg);
  return alpha * D;
}

Matrix solve_structured_lyap_inequality(
    const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& rhs,
    const std::vector<std::vector<Index>>& groups,
    const StructuredSolveOptions& opts) {
  const Index n = A.rows();
  if (A.cols() != n) throw DomainError("A must be square");
  if (rhs.rows() != n || rhs.cols() != n)
    throw DomainError("RHS dimension mismatch");
  if (!rhs.isApprox(rhs.transpose(), 1e-12))
    throw DomainError("RHS must be symmetric");

  const Pattern pat = Pattern::from_groups(n, groups);
  const Index p = static_cast<Index>(pat.entries.size());
  const double rhs_scale = spectral_norm_psd(rhs);
  const double eps = 1e-8 * rhs_scale;

  // D matrices of the Lyapunov map for each pattern entry.
  std::vector<Matrix> lyap_D(static_cast<size_t>(p));
  std::vector<Matrix> eye_D(static_cast<size_t>(p));
  for (Index i = 0; i < p; ++i) {
    const auto [a, b] = pat.entries[static_cast<size_t>(i)];
    const Matrix E = basis_element(n, a, b);
    lyap_D[static_cast<size_t>(i)] = -(A * E + E * A.transpose());
    eye_D[static_cast<size_t>(i)] = E;
  }

  // ---- Phase 1: minimize slack s with A P + P A^T + RHS <= s I. ----
  const Matrix P0 = std::max(1.0, 2.0 * eps) * Matrix::Identity(n, n);
  const Matrix M0 = A * P0 + P0 * A.transpose() + rhs;
  const double s0 =
      max_eigenvalue_sym(M0) + 0.1 * std::max(1.0, rhs_scale) + 0.1;

  AffineConstraint slack_con;  // s I - (A P + P A^T + RHS) >= 0
  slack_con.G0 = -rhs;
  slack_con.D = lyap_D;
  slack_con.D.push_back(Matrix::Identity(n, n));  // the s coordinate
  AffineConstraint pd_con;  // P - eps I >= 0
  pd_con.G0 = -eps * Matrix::Identity(n, n);
  pd_con.D = eye_D;
  pd_con.D.push_back(Matrix::Zero(n, n));

  Vector theta1(p + 1);
  theta1.head(p) = pat.project(P0);
  theta1[p] = s0;
  Vector c1 = Vector::Zero(p + 1);
  c1[p] = 1.0;

  const double s_good = -0.05 * std::max(1.0, rhs_scale);
  theta1 = barrier_minimize(
      c1, {slack_con, pd_con}, theta1, opts, rhs_scale,
      [&](const Vector& th) { return th[p] <= s_good; });
  const double slack = theta1[p];
  if (!(slack < 0.0)) {
    throw NumericalError(
        "structured Lyapunov inequality is infeasible for this block "
        "pattern: best achieved slack " +
        format_double(slack) + " (needs < 0; forcing-term norm " +
        format_double(rhs_scale) + ")");
  }

  // ---- Phase 2: minimize trace(P) from the strictly feasible start. ----
  AffineConstraint lyap_con;  // -(A P + P A^T + RHS) >= 0
  lyap_con.G0 = -rhs;
  lyap_con.D = lyap_D;
  AffineConstraint pd_con2;
  pd_con2.G0 = -eps * Matrix::Identity(n, n);
  pd_con2.D = eye_D;

  Vector c2(p);
  for (Index i = 0; i < p; ++i) {
    const auto [a, b] = pat.entries[static_cast<size_t>(i)];
    c2[i] = (a == b) ? 1.0 : 0.0;  // trace ignores off-diagonal entries
  }

  // Shrink the feasible point along its ray first; phase 1 cares only about
  // the slack sign and can return a needlessly large P.
  Vector theta2 = theta1.head(p);
  {
    auto strictly_feasible = [&](const Vector& th) {
      const Matrix P = pat.assemble(th);
      const double margin =
          -max_eigenvalue_sym(A * P + P * A.transpose() + rhs);
      if (!(margin > 0.02 * std::max(1.0, rhs_scale))) return false;
      return min_eigenvalue_sym(P) > eps;
    };
    while (strictly_feasible(0.5 * theta2)) theta2 *= 0.5;
  }
  theta2 = barrier_minimize(c2, {lyap_con, pd_con2}, theta2, opts, rhs_scale,
                            nullptr);

  const Matrix P = pat.assemble(theta2);
  const double margin = -max_eigenvalue_sym(A * P + P * A.transpose() + rhs);
  if (margin < -opts.feasibility_tol * std::max(1.0, rhs_scale))
    throw NumericalError("structured solve lost feasibility (margin " +
                         format_double(margin) + ")");
  return P;
}

StructuredGramians solve_structured_gramians(
    const LinearFluctuationSystem& sys, const PartitionSpec& part,
    BlockMode mode, const StructuredSolveOptions& opts) {
  part.validate();
  const Index n = sys.l + sys.k;
  if (sys.A.rows() != n) throw DomainError("system/partition size mismatch");
  if (part.l != sys.l) throw DomainError("partition retained size mismatch");
  if (part.k() != sys.k) throw DomainError("partition reducible size mismatch");

  const double max_re = max_real_eigenvalue(sys.A);
  if (!(max_re < 0.0))
    throw NumericalError("drift matrix is not Hurwitz (max Re eigenvalue " +
                         format_double(max_re) + ")");

  // State-index groups: the retained block is always one group; reducible
  // groups follow either as one block or one per lumped region.
  std::vector<std::vector<Index>> groups;
  {
    std::vector<Index> retained(static_cast<size_t>(sys.l));
    for (Index i = 0; i < sys.l; ++i) retained[static_cast<size_t>(i)] = i;
    groups.push_back(std::move(retained));
  }
  if (mode == BlockMode::two_block) {
    if (sys.k > 0) {
      std::vector<Index> red(static_cast<size_t>(sys.k));
      for (Index i = 0; i < sys.k; ++i) red[static_cast<size_t>(i)] = sys.l + i;
      groups.push_back(std::move(red));
    }
  } else {
    for (const auto& g : part.groups) {
      std::vector<Index> shifted;
      shifted.reserve(g.size());
      for (Index idx : g) shifted.push_back(sys.l + idx);
      groups.push_back(std::move(shifted));
    }
  }

  const Matrix BBt = sys.B * sys.B.transpose();
  const Matrix CtC = sys.C.transpose() * sys.C;

  StructuredGramians result;
  result.state_groups = groups;

  const MetzlerReport metz = is_metzler(sys.A);
  bool metzler_done = false;
  if (opts.try_metzler && metz.metzler) {
    try {
      result.P = metzler_diagonal_gramian(sys.A, BBt);
      result.Q = metzler_diagonal_gramian(sys.A.transpose(), CtC);
      metzler_done = true;
    } catch (const std::exception&) {
      metzler_done = false;  // fall through to the structured solver
    }
  }
  if (!metzler_done) {
    result.P = solve_structured_lyap_inequality(sys.A, BBt, groups, opts);
    result.Q = solve_structured_lyap_inequality(sys.A.transpose(), CtC, groups,
                                                opts);
  }

  result.margin_p = -max_eigenvalue_sym(sys.A * result.P +
                                        result.P * sys.A.transpose() + BBt);
  result.margin_q = -max_eigenvalue_sym(result.Q * sys.A +
                                        sys.A.transpose() * result.Q + CtC);

  const double tol_p = opts.feasibility_tol * spectral_norm_psd(BBt);
  const double tol_q = opts.feasibility_tol * spectral_norm_psd(CtC);
  if (result.margin_p < -tol_p || result.margin_q < -tol_q)
    throw NumericalError("structured Gramians violate the Lyapunov "
                         "inequalities (margins " +
                         format_double(result.margin_p) + ", " +
                         format_double(result.margin_q) + ")");
  if (!(min_eigenvalue_sym(result.P) >=
        1e-10 * max_eigenvalue_sym(result.P)) ||
      !(min_eigenvalue_sym(result.Q) >= 1e-10 * max_eigenvalue_sym(result.Q)))
    throw NumericalError("structured Gramians are not positive definite");
  return result;
}

}  // namespace lnared
