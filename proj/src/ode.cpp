#include <lnared/ode.hpp>

#include <algorithm>
#include <cmath>

namespace lnared {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Shampine dense-output weights.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

struct DenseSegment {
  double t0, h;
  Vector r1, r2, r3, r4, r5;

  Vector eval(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
  }
};

double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                  double rtol, double atol) {
  double acc = 0.0;
  for (Index i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const OdeRhs& rhs, double t0, const Vector& y0,
                    const Vector& f0, double t_end, double rtol, double atol) {
  auto weighted = [&](const Vector& v, const Vector& ref) {
    double acc = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
      const double sc = atol + rtol * std::abs(ref[i]);
      const double q = v[i] / sc;
      acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
  };
  const double d0 = weighted(y0, y0);
  const double d1n = weighted(f0, y0);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, (t_end - t0));
  const Vector y1 = y0 + h0 * f0;
  const Vector f1 = rhs(t0 + h0, y1);
  const double d2 = weighted(f1 - f0, y0) / h0;
  double h1;
  if (std::max(d1n, d2) <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1n, d2), 0.2);
  }
  return std::min({100.0 * h0, h1, t_end - t0});
}

}  // namespace

std::vector<double> linspace(double a, double b, Index n) {
  std::vector<double> t(static_cast<size_t>(n));
  if (n == 1) {
    t[0] = a;
    return t;
  }
  for (Index i = 0; i < n; ++i)
    t[static_cast<size_t>(i)] =
        a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  t.back() = b;
  return t;
}

Trajectory integrate_ode(const OdeRhs& rhs, const Vector& x0,
                         std::span<const double> sample_times,
                         const OdeOptions& opts) {
  if (sample_times.size() < 1) throw DomainError("no sample times given");
  for (size_t i = 1; i < sample_times.size(); ++i)
    if (!(sample_times[i] > sample_times[i - 1]))
      throw DomainError("sample times must be strictly increasing");
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0))
    throw DomainError("tolerances must be positive");
  if (!x0.allFinite()) throw DomainError("initial state is not finite");

  const double t0 = sample_times.front();
  const double t_end = sample_times.back();
  const Index n = x0.size();

  Trajectory out;
  out.times.assign(sample_times.begin(), sample_times.end());
  out.states.resize(static_cast<Index>(sample_times.size()), n);
  out.derivs.resize(static_cast<Index>(sample_times.size()), n);

  auto eval_rhs = [&](double t, const Vector& y) {
    Vector f = rhs(t, y);
    if (!f.allFinite())
      throw NumericalError("right-hand side is not finite at t = " +
                           format_double(t));
    return f;
  };

  Vector y = x0;
  Vector f = eval_rhs(t0, y);
  size_t next_sample = 0;
  auto emit = [&](double t_sample, const Vector& ys, const Vector& fs) {
    out.states.row(static_cast<Index>(next_sample)) = ys.transpose();
    out.derivs.row(static_cast<Index>(next_sample)) = fs.transpose();
    (void)t_sample;
    ++next_sample;
  };
  emit(t0, y, f);

  if (sample_times.size() == 1) return out;

  double t = t0;
  double h = opts.first_step > 0.0
                 ? opts.first_step
                 : initial_step(rhs, t0, y, f, t_end, opts.rtol, opts.atol);
  h = std::min(h, opts.max_step);
  bool rejected = false;
  long steps = 0;

  Vector k1 = f, k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y1(n), err(n);

  while (t < t_end) {
    if (++steps > opts.max_steps)
      throw NumericalError("integrator exceeded max_steps at t = " +
                           format_double(t));
    h = std::min(h, t_end - t);
    if (h < 16.0 * std::numeric_limits<double>::epsilon() *
                std::max(1.0, std::abs(t)))
      throw NumericalError(
          "step size underflow at t = " + format_double(t) +
          " (the problem may be stiff; an explicit method cannot proceed)");

    k2 = eval_rhs(t + c2 * h, y + h * (a21 * k1));
    k3 = eval_rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    k4 = eval_rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = eval_rhs(t + c5 * h,
                  y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = eval_rhs(
        t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = eval_rhs(t + h, y1);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double errn = error_norm(err, y, y1, opts.rtol, opts.atol);
    if (errn <= 1.0) {
      // Accepted; serve dense output for samples inside (t, t+h].
      if (next_sample < sample_times.size() &&
          sample_times[next_sample] <= t + h) {
        DenseSegment seg;
        seg.t0 = t;
        seg.h = h;
        const Vector ydiff = y1 - y;
        const Vector bspl = h * k1 - ydiff;
        seg.r1 = y;
        seg.r2 = ydiff;
        seg.r3 = bspl;
        seg.r4 = ydiff - h * k7 - bspl;
        seg.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 +
                      d7 * k7);
        while (next_sample < sample_times.size() &&
               sample_times[next_sample] <= t + h + 1e-14 * std::abs(t + h)) {
          const double ts = sample_times[next_sample];
          if (ts >= t + h) {
            emit(ts, y1, k7);
          } else {
            const Vector ys = seg.eval(ts);
            emit(ts, ys, eval_rhs(ts, ys));
          }
        }
      }
      t += h;
      y.swap(y1);
      k1 = k7;  // first-same-as-last
      double fac = 0.9 * std::pow(errn > 0.0 ? errn : 1e-16, -0.2);
      fac = std::clamp(fac, 0.2, rejected ? 1.0 : 5.0);
      h = std::min(h * fac, opts.max_step);
      rejected = false;
    } else {
      rejected = true;
      const double fac = std::clamp(0.9 * std::pow(errn, -0.2), 0.2, 1.0);
      h *= fac;
    }
  }

  while (next_sample < sample_times.size()) emit(t_end, y, k1);
  return out;
}

CubicHermite::CubicHermite(const Trajectory& traj)
    : times_(traj.times), values_(traj.states) {
  const Index m = traj.size();
  if (m < 1) throw DomainError("empty trajectory");
  if (traj.derivs.rows() == m && traj.derivs.cols() == traj.dim()) {
    slopes_ = traj.derivs;
    return;
  }
  // Finite-difference slopes (three-point at interior, one-sided at ends).
  slopes_.resize(m, traj.dim());
  if (m == 1) {
    slopes_.setZero();
    return;
  }
  for (Index i = 0; i < m; ++i) {
    if (i == 0) {
      slopes_.row(0) = (values_.row(1) - values_.row(0)) /
                       (times_[1] - times_[0]);
    } else if (i == m - 1) {
      slopes_.row(i) = (values_.row(i) - values_.row(i - 1)) /
                       (times_[static_cast<size_t>(i)] -
                        times_[static_cast<size_t>(i - 1)]);
    } else {
      const double h0 = times_[static_cast<size_t>(i)] -
                        times_[static_cast<size_t>(i - 1)];
      const double h1 = times_[static_cast<size_t>(i + 1)] -
                        times_[static_cast<size_t>(i)];
      slopes_.row(i) = (values_.row(i + 1) * (h0 / h1) -
                        values_.row(i - 1) * (h1 / h0) +
                        values_.row(i) * (h1 / h0 - h0 / h1)) /
                       (h0 + h1);
    }
  }
}

Vector CubicHermite::operator()(double t) const {
  const size_t m = times_.size();
  if (m == 1) return values_.row(0).transpose();
  t = std::clamp(t, times_.front(), times_.back());
  size_t hi = static_cast<size_t>(
      std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
  hi = std::clamp<size_t>(hi, 1, m - 1);
  const size_t lo = hi - 1;
  const double h = times_[hi] - times_[lo];
  const double s = (t - times_[lo]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return (h00 * values_.row(static_cast<Index>(lo)) +
          h10 * h * slopes_.row(static_cast<Index>(lo)) +
          h01 * values_.row(static_cast<Index>(hi)) +
          h11 * h * slopes_.row(static_cast<Index>(hi)))
      .transpose();
}

}  // namespace lnared
