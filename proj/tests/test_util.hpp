#pragma once

#include <lnared/parser.hpp>
#include <lnared/lyapunov.hpp>

#include <random>
#include <string>

namespace lnared::testutil {

inline std::string models_dir() { return LNARED_MODELS_DIR; }

inline ReactionNetwork toy_model() {
  return parse_network_file(models_dir() + "/toy.net");
}

inline ReactionNetwork chain2_model() {
  return parse_network_file(models_dir() + "/chain2.net");
}

// x' = -x, declared via a single first-order decay reaction.
inline ReactionNetwork decay_model() {
  return parse_network(
      "species X = 1\n"
      "volume = 1\n"
      "output X\n"
      "reaction deg: X -> @ X\n");
}

// x' = b - x with b = 1.
inline ReactionNetwork decay_with_source_model() {
  return parse_network(
      "species X = 0\n"
      "param b = 1\n"
      "volume = 1\n"
      "output X\n"
      "reaction prod: -> X @ b\n"
      "reaction deg: X -> @ X\n");
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = dist(rng);
  return M;
}

// Random Hurwitz matrix: shift a random matrix left past its spectral abscissa.
inline Matrix random_hurwitz(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> margin(0.2, 1.2);
  Matrix A = random_matrix(rng, n, n);
  const double shift = max_real_eigenvalue(A) + margin(rng);
  A.diagonal().array() -= shift;
  return A;
}

// Independent oracle: A P + P A^T + Q = 0 via the dense Kronecker system
// (I (x) A + A (x) I) vec(P) = -vec(Q).
inline Matrix kron_lyapunov_solve(const Matrix& A, const Matrix& Q) {
  const Index n = A.rows();
  Matrix K = Matrix::Zero(n * n, n * n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index row = i * n + j;
      for (Index t = 0; t < n; ++t) {
        K(row, t * n + j) += A(i, t);  // (A P)_{ij}
        K(row, i * n + t) += A(j, t);  // (P A^T)_{ij}
      }
    }
  }
  Vector q(n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) q[i * n + j] = -Q(i, j);
  const Vector p = K.partialPivLu().solve(q);
  Matrix P(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) P(i, j) = p[i * n + j];
  return P;
}

// Central finite differences of a vector map.
template <typename Fn>
Matrix finite_difference_jacobian(const Fn& f, const Vector& x) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  for (Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

}  // namespace lnared::testutil
