#pragma once

#include <lnared/common.hpp>

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace lnared {

/// Sampled solution of an initial value problem. One row of `states` per
/// sample time; `derivs` carries the right-hand side at the same samples when
/// the producer had it (used for cubic Hermite interpolation downstream).
struct Trajectory {
  std::vector<double> times;
  Matrix states;  // size() x dim()
  Matrix derivs;  // size() x dim(), or 0x0
  std::vector<std::string> labels;

  Index size() const { return static_cast<Index>(times.size()); }
  Index dim() const { return states.cols(); }
};

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  double first_step = 0.0;  // 0 = choose automatically
  long max_steps = 10'000'000;
};

using OdeRhs = std::function<Vector(double, const Vector&)>;

/// Adaptive embedded Runge-Kutta 4(5) (Dormand-Prince pair) with fourth-order
/// dense output at the requested sample times. `sample_times` must be
/// strictly increasing; integration runs from sample_times.front() to
/// sample_times.back(). Throws NumericalError on step-size underflow (a
/// stiffness indicator) or a non-finite right-hand side.
Trajectory integrate_ode(const OdeRhs& rhs, const Vector& x0,
                         std::span<const double> sample_times,
                         const OdeOptions& opts = {});

std::vector<double> linspace(double a, double b, Index n);

/// Piecewise-cubic interpolant of a trajectory. Uses the stored derivatives
/// when present, otherwise finite-difference slopes.
class CubicHermite {
 public:
  explicit CubicHermite(const Trajectory& traj);

  Vector operator()(double t) const;  // clamped to [t_begin, t_end]
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }

 private:
  std::vector<double> times_;
  Matrix values_, slopes_;
};

}  // namespace lnared
