#pragma once

#include <lnared/reduce.hpp>

#include <map>
#include <string>

namespace lnared {

struct SignalNorms {
  double l1 = 0.0;    // integral of |u(t)|_1
  double l2 = 0.0;    // sqrt of integral of |u(t)|_2^2
  double linf = 0.0;  // sup over the grid of |u(t)|_inf
};

/// Norms of a sampled vector signal over its time span. The signal is
/// interpolated cubically and integrated by the trapezoid rule on a grid that
/// is doubled until every norm moves by less than 0.1%.
SignalNorms signal_norms(const Trajectory& error_signal);

struct CovarianceError {
  double steady_state = 0.0;      // Frobenius error at the last sample
  std::vector<double> times;
  std::vector<double> frobenius;  // per-sample Frobenius errors
};

/// Frobenius distance between two output-covariance trajectories on a common
/// grid (both already projected to output space).
CovarianceError covariance_error(const CovTrajectory& full_cov,
                                 const CovTrajectory& reduced_cov);

struct ErrorReport {
  SignalNorms norms;
  double cov_err_ss = 0.0;
  std::vector<double> cov_err_times;
  std::vector<double> cov_err_traj;
  std::map<std::string, std::string> metadata;
};

/// Full-vs-reduced comparison from a perturbed steady state: the macroscopic
/// outputs of both models start at x0 = x_ss + perturbation with zero initial
/// fluctuations. Covariances are integrated far enough past t_end for the
/// steady-state error to be meaningful (t >= 20 / |Re lambda_max|).
ErrorReport compare_models(const ReactionNetwork& net, const ReducedModel& rm,
                           const std::map<std::string, double>& perturbation,
                           double t_end, const OdeOptions& opts = {});

}  // namespace lnared
