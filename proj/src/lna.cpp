#include <lnared/lna.hpp>
#include <lnared/lyapunov.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <random>

namespace lnared {

void CovTrajectory::validate() const {
  for (size_t i = 0; i < covariances.size(); ++i) {
    const Matrix& X = covariances[i];
    const double asym = (X - X.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, X.cwiseAbs().maxCoeff()))
      throw NumericalError("covariance at t = " + format_double(times[i]) +
                           " is asymmetric by " + format_double(asym));
    const double lam_min = min_eigenvalue_sym(X);
    if (lam_min < -1e-9 * std::max(1.0, X.norm()))
      throw NumericalError("covariance at t = " + format_double(times[i]) +
                           " has eigenvalue " + format_double(lam_min));
  }
}

Vector macroscopic_rhs(const ReactionNetwork& net, const Vector& x) {
  return net.stoichiometry() * net.eval_rates(x);
}

Matrix drift_jacobian(const ReactionNetwork& net, const Vector& x) {
  return net.stoichiometry() * net.rate_jacobian_at(x);
}

Matrix noise_amplitude(const ReactionNetwork& net, const Vector& x) {
  const Vector f = net.eval_rates(x);
  for (Index j = 0; j < f.size(); ++j) {
    if (f[j] < 0.0)
      throw DomainError("reaction '" + net.reactions()[j].name +
                        "' has negative rate " + format_double(f[j]) +
                        "; noise amplitude sqrt(f) undefined");
  }
  return f.cwiseSqrt().asDiagonal();
}

SteadyStateResult steady_state(const ReactionNetwork& net,
                               const Vector& x_guess,
                               const SteadyStateOptions& opts) {
  if (x_guess.size() != net.species_count())
    throw DomainError("steady-state guess dimension mismatch");
  if (!x_guess.allFinite() || (x_guess.array() < 0.0).any())
    throw DomainError("steady-state guess must be finite and nonnegative");

  auto residual_of = [&](const Vector& x) {
    const Vector f = net.eval_rates(x);
    const double scale = 1.0 + f.cwiseAbs().maxCoeff();
    return std::make_pair((net.stoichiometry() * f).cwiseAbs().maxCoeff(),
                          scale);
  };

  Vector x = x_guess;
  SteadyStateResult result;
  bool converged = false;

  auto [res, scale] = residual_of(x);
  for (int it = 0; it < opts.max_iterations && !converged; ++it) {
    if (res <= opts.tol * scale) {
      converged = true;
      break;
    }
    const Matrix J = drift_jacobian(net, x);
    const Vector g = macroscopic_rhs(net, x);
    Eigen::PartialPivLU<Matrix> lu(J);
    const Vector step = lu.solve(-g);
    if (!step.allFinite()) break;

    double alpha = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      const Vector x_trial = x + alpha * step;
      double res_trial;
      double scale_trial;
      try {
        std::tie(res_trial, scale_trial) = residual_of(x_trial);
      } catch (const NumericalError&) {
        alpha *= 0.5;  // rate undefined at the trial point
        continue;
      }
      if (res_trial < res) {
        x = x_trial;
        res = res_trial;
        scale = scale_trial;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    ++result.newton_iterations;
    if (!improved) break;
  }
  if (!converged && res <= opts.tol * scale) converged = true;

  if (!converged) {
    // Long integration with a doubling horizon.
    result.used_fallback = true;
    double t_end = opts.fallback_t_start;
    Vector x_run = x_guess;
    for (int attempt = 0; attempt < opts.fallback_max_doublings; ++attempt) {
      OdeOptions ode;
      ode.rtol = 1e-10;
      ode.atol = 1e-12;
      const std::vector<double> ts = {0.0, t_end};
      const Trajectory traj = integrate_ode(
          [&](double, const Vector& y) { return macroscopic_rhs(net, y); },
          x_run, ts, ode);
      x_run = traj.states.row(traj.size() - 1).transpose();
      std::tie(res, scale) = residual_of(x_run);
      if (res <= opts.tol * scale) {
        x = x_run;
        converged = true;
        break;
      }
      t_end *= 2.0;
    }
  }

  if (!converged)
    throw NumericalError("steady-state search did not converge (residual " +
                         format_double(res) + ")");
  if ((x.array() < -1e-9).any())
    throw NumericalError("steady-state search converged to negative "
                         "concentrations");
  x = x.cwiseMax(0.0);

  result.x_ss = x;
  result.residual = res;
  result.max_real_eig = max_real_eigenvalue(drift_jacobian(net, x));
  result.hurwitz = result.max_real_eig < 0.0;
  return result;
}

namespace {

Matrix unvec(const Vector& v, Index n) {
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

Vector vec(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

}  // namespace

CovTrajectory integrate_lyapunov_cov(const ReactionNetwork& net,
                                     const Trajectory& x_traj,
                                     const Matrix& X0, const OdeOptions& opts,
                                     CovIntegration mode) {
  const Index n = net.species_count();
  if (X0.rows() != n || X0.cols() != n)
    throw DomainError("X0 dimension mismatch");
  if ((X0 - X0.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, X0.cwiseAbs().maxCoeff()))
    throw DomainError("X0 must be symmetric");
  if (min_eigenvalue_sym(X0) < -1e-9 * std::max(1.0, X0.norm()))
    throw DomainError("X0 must be positive semidefinite");
  if (x_traj.dim() != n) throw DomainError("trajectory dimension mismatch");

  const double omega_inv = 1.0 / net.volume();

  auto cov_rhs_at = [&](const Vector& x, const Matrix& X) {
    const Matrix J = drift_jacobian(net, x);
    const Vector f = net.eval_rates(x);
    const Matrix D =
        omega_inv * net.stoichiometry() * f.cwiseMax(0.0).asDiagonal() *
        net.stoichiometry().transpose();
    Matrix dX = J * X + X * J.transpose() + D;
    return (0.5 * (dX + dX.transpose())).eval();
  };

  CovTrajectory out;
  out.times = x_traj.times;

  if (mode == CovIntegration::interpolate_macroscopic) {
    const CubicHermite xi(x_traj);
    OdeRhs rhs = [&](double t, const Vector& v) {
      const Matrix X = 0.5 * (unvec(v, n) + unvec(v, n).transpose());
      return vec(cov_rhs_at(xi(t), X));
    };
    const Trajectory cov_traj = integrate_ode(rhs, vec(X0), x_traj.times, opts);
    out.covariances.reserve(cov_traj.size());
    for (Index i = 0; i < cov_traj.size(); ++i) {
      const Matrix X = unvec(cov_traj.states.row(i).transpose(), n);
      out.covariances.push_back(0.5 * (X + X.transpose()));
    }
  } else {
    // Joint integration of (x, vec X).
    OdeRhs rhs = [&](double, const Vector& v) {
      const Vector x = v.head(n);
      const Matrix X = 0.5 * (unvec(v.tail(n * n), n) +
                              unvec(v.tail(n * n), n).transpose());
      Vector dv(n + n * n);
      dv.head(n) = macroscopic_rhs(net, x);
      dv.tail(n * n) = vec(cov_rhs_at(x, X));
      return dv;
    };
    Vector v0(n + n * n);
    v0.head(n) = x_traj.states.row(0).transpose();
    v0.tail(n * n) = vec(X0);
    const Trajectory joint = integrate_ode(rhs, v0, x_traj.times, opts);
    out.covariances.reserve(joint.size());
    for (Index i = 0; i < joint.size(); ++i) {
      const Matrix X = unvec(joint.states.row(i).tail(n * n).transpose(), n);
      out.covariances.push_back(0.5 * (X + X.transpose()));
    }
  }
  return out;
}

LinearFluctuationSystem linearize_at(const ReactionNetwork& net,
                                     const Vector& x_ss,
                                     std::span<const Index> retained) {
  const Index n = net.species_count();
  if (retained.empty())
    throw DomainError("at least one species must be retained");
  if (x_ss.size() != n) throw DomainError("x_ss dimension mismatch");

  std::vector<bool> is_retained(n, false);
  std::vector<Index> perm;
  perm.reserve(n);
  for (Index idx : retained) {
    if (idx < 0 || idx >= n) throw DomainError("retained index out of range");
    if (is_retained[idx]) throw DomainError("retained species listed twice");
    is_retained[idx] = true;
    perm.push_back(idx);
  }
  for (Index i = 0; i < n; ++i)
    if (!is_retained[i]) perm.push_back(i);

  const ReactionNetwork pnet = permute_species(net, perm);
  Vector x_perm(n);
  for (Index i = 0; i < n; ++i) x_perm[i] = x_ss[perm[i]];

  LinearFluctuationSystem sys;
  sys.l = static_cast<Index>(retained.size());
  sys.k = n - sys.l;
  sys.A = drift_jacobian(pnet, x_perm);
  sys.B = (1.0 / std::sqrt(pnet.volume())) * pnet.stoichiometry() *
          noise_amplitude(pnet, x_perm);
  sys.C = Matrix::Zero(sys.l, n);
  sys.C.leftCols(sys.l).setIdentity();
  sys.x_ss = x_perm;
  sys.labels = pnet.species_names();
  sys.perm = perm;

  const double max_re = max_real_eigenvalue(sys.A);
  if (!(max_re < 0.0))
    throw NumericalError(
        "drift matrix is not Hurwitz at the linearization point (max Re "
        "eigenvalue " +
        format_double(max_re) + "); reduction theory requires stability");
  return sys;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(path_index + 1)));
}

// One Euler-Maruyama sweep; reports eta at every store_stride-th step.
template <typename MatAt>
void run_path(const MatAt& drift_at, const MatAt& noise_at, Index dim,
              Index n_channels, double dt, long n_steps, Index store_stride,
              std::mt19937_64& rng,
              const std::function<void(long, const Vector&)>& on_store) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sqrt_dt = std::sqrt(dt);
  Vector eta = Vector::Zero(dim);
  Vector xi(n_channels);
  on_store(0, eta);
  long stored = 1;
  for (long s = 1; s <= n_steps; ++s) {
    const double t = static_cast<double>(s - 1) * dt;
    for (Index c = 0; c < n_channels; ++c) xi[c] = gauss(rng);
    eta += dt * (drift_at(t) * eta) + sqrt_dt * (noise_at(t) * xi);
    if (s % store_stride == 0 || s == n_steps) {
      on_store(stored, eta);
      ++stored;
    }
  }
}

EnsembleSummary run_ensemble(
    const std::function<Matrix(double)>& drift_at,
    const std::function<Matrix(double)>& noise_at, Index dim, Index n_channels,
    double dt, double t_end, long n_paths, std::uint64_t seed,
    Index store_stride) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (n_paths < 1) throw DomainError("need at least one path");
  if (store_stride < 1) store_stride = 1;
  const long n_steps = std::max<long>(1, std::lround(t_end / dt));

  std::vector<long> stored_steps;
  stored_steps.push_back(0);
  for (long s = 1; s <= n_steps; ++s)
    if (s % store_stride == 0 || s == n_steps) stored_steps.push_back(s);
  const size_t n_store = stored_steps.size();

  EnsembleSummary summary;
  summary.paths = n_paths;
  summary.times.resize(n_store);
  for (size_t i = 0; i < n_store; ++i)
    summary.times[i] = static_cast<double>(stored_steps[i]) * dt;
  summary.mean = Matrix::Zero(static_cast<Index>(n_store), dim);
  summary.covariance.assign(n_store, Matrix::Zero(dim, dim));

  std::function<Matrix(double)> drift = drift_at, noise = noise_at;
  std::vector<Matrix> sum_outer(n_store, Matrix::Zero(dim, dim));

  for (long p = 0; p < n_paths; ++p) {
    auto rng = path_rng(seed, static_cast<std::uint64_t>(p));
    run_path<std::function<Matrix(double)>>(
        drift, noise, dim, n_channels, dt, n_steps, store_stride, rng,
        [&](long slot, const Vector& eta) {
          summary.mean.row(slot) += eta.transpose();
          sum_outer[static_cast<size_t>(slot)] += eta * eta.transpose();
        });
  }

  const double inv_n = 1.0 / static_cast<double>(n_paths);
  summary.mean *= inv_n;
  for (size_t i = 0; i < n_store; ++i) {
    const Vector m = summary.mean.row(static_cast<Index>(i)).transpose();
    summary.covariance[i] = sum_outer[i] * inv_n - m * m.transpose();
  }
  return summary;
}

}  // namespace

EnsembleSummary simulate_fluctuation_paths(const Matrix& A, const Matrix& B,
                                           double dt, double t_end,
                                           long n_paths, std::uint64_t seed,
                                           Index store_stride) {
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw DomainError("A/B dimension mismatch");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (n_paths < 1) throw DomainError("need at least one path");
  if (store_stride < 1) store_stride = 1;

  const Index dim = A.rows();
  const Index n_channels = B.cols();
  const long n_steps = std::max<long>(1, std::lround(t_end / dt));
  const double sqrt_dt = std::sqrt(dt);

  std::vector<long> stored_steps{0};
  for (long s = 1; s <= n_steps; ++s)
    if (s % store_stride == 0 || s == n_steps) stored_steps.push_back(s);
  const size_t n_store = stored_steps.size();

  EnsembleSummary summary;
  summary.paths = n_paths;
  summary.times.resize(n_store);
  for (size_t i = 0; i < n_store; ++i)
    summary.times[i] = static_cast<double>(stored_steps[i]) * dt;
  summary.mean = Matrix::Zero(static_cast<Index>(n_store), dim);
  std::vector<Matrix> sum_outer(n_store, Matrix::Zero(dim, dim));

  Vector eta(dim), xi(n_channels), deta(dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (long p = 0; p < n_paths; ++p) {
    auto rng = path_rng(seed, static_cast<std::uint64_t>(p));
    eta.setZero();
    long slot = 1;
    for (long s = 1; s <= n_steps; ++s) {
      for (Index c = 0; c < n_channels; ++c) xi[c] = gauss(rng);
      deta.noalias() = dt * (A * eta) + sqrt_dt * (B * xi);
      eta += deta;
      if (s % store_stride == 0 || s == n_steps) {
        summary.mean.row(slot) += eta.transpose();
        sum_outer[static_cast<size_t>(slot)] += eta * eta.transpose();
        ++slot;
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n_paths);
  summary.mean *= inv_n;
  summary.covariance.assign(n_store, Matrix::Zero(dim, dim));
  for (size_t i = 0; i < n_store; ++i) {
    const Vector m = summary.mean.row(static_cast<Index>(i)).transpose();
    summary.covariance[i] = sum_outer[i] * inv_n - m * m.transpose();
  }
  return summary;
}

EnsembleSummary simulate_fluctuation_paths(const ReactionNetwork& net,
                                           const Trajectory& x_traj, double dt,
                                           long n_paths, std::uint64_t seed,
                                           Index store_stride) {
  const CubicHermite xi(x_traj);
  const double scale = 1.0 / std::sqrt(net.volume());
  auto drift_at = [&](double t) { return drift_jacobian(net, xi(t)); };
  auto noise_at = [&](double t) {
    return (scale * net.stoichiometry() * noise_amplitude(net, xi(t))).eval();
  };
  return run_ensemble(drift_at, noise_at, net.species_count(),
                      net.reaction_count(), dt, x_traj.times.back(), n_paths,
                      seed, store_stride);
}

Trajectory sample_fluctuation_path(const Matrix& A, const Matrix& B, double dt,
                                   double t_end, std::uint64_t seed,
                                   std::uint64_t path_index) {
  const long n_steps = std::max<long>(1, std::lround(t_end / dt));
  Trajectory traj;
  traj.times.resize(static_cast<size_t>(n_steps) + 1);
  traj.states.resize(n_steps + 1, A.rows());
  auto rng = path_rng(seed, path_index);
  auto drift = [&A](double) { return A; };
  auto noise = [&B](double) { return B; };
  run_path<std::function<Matrix(double)>>(
      drift, noise, A.rows(), B.cols(), dt, n_steps, 1, rng,
      [&](long slot, const Vector& eta) {
        traj.times[static_cast<size_t>(slot)] =
            static_cast<double>(slot) * dt;
        traj.states.row(slot) = eta.transpose();
      });
  return traj;
}

}  // namespace lnared
