#pragma once

#include <lnared/network.hpp>
#include <lnared/ode.hpp>

#include <cstdint>
#include <span>

namespace lnared {

/// Time-indexed covariance matrices X(t) of the fluctuation process.
struct CovTrajectory {
  std::vector<double> times;
  std::vector<Matrix> covariances;

  Index size() const { return static_cast<Index>(times.size()); }
  /// Checks symmetry (1e-12) and numerical positive semidefiniteness
  /// (eigenvalues >= -1e-9 * ||X||); throws NumericalError otherwise.
  void validate() const;
};

/// dx/dt = S f(x).
Vector macroscopic_rhs(const ReactionNetwork& net, const Vector& x);

/// J(x) = S df/dx, the drift of the fluctuation dynamics.
Matrix drift_jacobian(const ReactionNetwork& net, const Vector& x);

/// F(x) = diag(sqrt(f(x))), reaction_count square. Throws when any rate is
/// negative, naming the reaction.
Matrix noise_amplitude(const ReactionNetwork& net, const Vector& x);

struct SteadyStateOptions {
  int max_iterations = 50;
  int max_halvings = 30;
  double tol = 1e-10;           // on ||S f||_inf relative to 1 + ||f||_inf
  double fallback_t_start = 10.0;
  int fallback_max_doublings = 14;
};

struct SteadyStateResult {
  Vector x_ss;
  double residual = 0.0;        // ||S f(x_ss)||_inf
  bool hurwitz = false;
  double max_real_eig = 0.0;    // of J(x_ss)
  int newton_iterations = 0;
  bool used_fallback = false;
};

/// Damped Newton on S f(x) = 0, falling back to long integration with a
/// doubling horizon when Newton stalls. Rejects converged points with
/// negative concentrations. The Hurwitz property of J(x_ss) is verified and
/// reported, not enforced.
SteadyStateResult steady_state(const ReactionNetwork& net,
                               const Vector& x_guess,
                               const SteadyStateOptions& opts = {});

enum class CovIntegration {
  interpolate_macroscopic,  // J, F re-evaluated on a cubic interpolant of x(t)
  cointegrate,              // (x, X) integrated jointly
};

/// Integrates dX/dt = J X + X J^T + (1/volume) S F^2 S^T along x(t),
/// starting from symmetric PSD X0, sampled on the trajectory's time grid.
/// X is symmetrized at every evaluation.
CovTrajectory integrate_lyapunov_cov(
    const ReactionNetwork& net, const Trajectory& x_traj, const Matrix& X0,
    const OdeOptions& opts = {},
    CovIntegration mode = CovIntegration::interpolate_macroscopic);

/// Fluctuation system linearized at a steady state: A = J(x_ss),
/// B = volume^{-1/2} S F(x_ss), C = [I_l 0]. Species are permuted so the
/// retained ones come first; `perm` maps new index -> original index.
struct LinearFluctuationSystem {
  Matrix A, B, C;
  Index l = 0, k = 0;
  Vector x_ss;  // permuted order
  std::vector<std::string> labels;
  std::vector<Index> perm;
};

/// Throws DomainError when `retained` is empty or not a valid species subset,
/// NumericalError when A is not Hurwitz.
LinearFluctuationSystem linearize_at(const ReactionNetwork& net,
                                     const Vector& x_ss,
                                     std::span<const Index> retained);

/// Mean and covariance over an Euler-Maruyama ensemble of the linear SDE
/// d(eta) = A eta dt + B dGamma with eta(0) = 0. Each path draws from an
/// independent generator seeded by (seed, path index), so results do not
/// depend on evaluation order.
struct EnsembleSummary {
  std::vector<double> times;
  Matrix mean;                    // size() x dim
  std::vector<Matrix> covariance;  // per time, dim x dim
  long paths = 0;
};

EnsembleSummary simulate_fluctuation_paths(const Matrix& A, const Matrix& B,
                                           double dt, double t_end,
                                           long n_paths, std::uint64_t seed,
                                           Index store_stride = 1);

/// Time-varying variant: J and B = volume^{-1/2} S F follow the macroscopic
/// trajectory (cubic interpolation between samples).
EnsembleSummary simulate_fluctuation_paths(const ReactionNetwork& net,
                                           const Trajectory& x_traj, double dt,
                                           long n_paths, std::uint64_t seed,
                                           Index store_stride = 1);

/// Single path, for inspection and tests.
Trajectory sample_fluctuation_path(const Matrix& A, const Matrix& B, double dt,
                                   double t_end, std::uint64_t seed,
                                   std::uint64_t path_index);

}  // namespace lnared
