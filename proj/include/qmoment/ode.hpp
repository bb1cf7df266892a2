#pragma once

// Explicit Runge-Kutta kernels with cubic Hermite dense output.
//
// The rhs has signature f(t, const double* y, double* dydt). Samples are
// delivered on the grid t0 + k*sample_interval plus t_end itself; the first
// sample is the initial state, untouched.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

namespace qmoment::ode {

enum class Method { RK4, DormandPrince45 };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct Control {
  Method method = Method::DormandPrince45;
  double dt = 1e-3;               // RK4 step
  double rtol = 1e-9;
  double atol = 1e-9;
  double sample_interval = 0.01;
  double min_step = 1e-12;        // adaptive step underflow threshold
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 100'000'000;

  void validate() const;
  bool operator==(const Control&) const = default;
};

enum class Stop { Completed, Check, StepUnderflow, StepLimit };

struct Outcome {
  Stop stop = Stop::Completed;
  int check_code = 0;   // value returned by the check callback when stop == Check
  double t = 0.0;       // time reached (last accepted step)
  long accepted = 0;
  long rejected = 0;
};

namespace detail {

struct Sampler {
  double t0, t_end, interval;
  long next = 1;
  double time(long k) const {
    const double v = t0 + static_cast<double>(k) * interval;
    return v > t_end - 1e-9 * interval ? t_end : v;
  }
  bool done = false;
};

inline void hermite(double t0, double h, const std::vector<double>& y0, const std::vector<double>& f0,
                    const std::vector<double>& y1, const std::vector<double>& f1, double t,
                    std::vector<double>& out) {
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  for (std::size_t i = 0; i < y0.size(); ++i)
    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
}

// Emits every pending grid sample in (t0, t0 + h].
template <class SampleFn>
void emit(Sampler& smp, double t0, double h, const std::vector<double>& y0,
          const std::vector<double>& f0, const std::vector<double>& y1,
          const std::vector<double>& f1, std::vector<double>& buf, SampleFn& sample) {
  const double t1 = t0 + h;
  while (!smp.done) {
    const double ts = smp.time(smp.next);
    const bool last = ts >= smp.t_end;
    if (ts > t1 && !(last && t1 >= smp.t_end)) break;
    if (last || ts == t1) {
      sample(last ? smp.t_end : ts, y1);
    } else {
      hermite(t0, h, y0, f0, y1, f1, ts, buf);
      sample(ts, buf);
    }
    if (last) smp.done = true;
    ++smp.next;
  }
}

}  // namespace detail

/// Integrates from (t0, y0) to t_end. `check(t, y)` runs on each accepted step
/// end: a positive code aborts before the step's samples are emitted, a
/// negative one aborts after emitting them and passes the step end to
/// `final(t, y)`. `on_step(t, h, y0, f0, y1, f1)` sees every step whose
/// samples are emitted. Exceptions thrown by `f` propagate.
template <class Rhs, class SampleFn, class CheckFn, class FinalFn, class StepFn>
Outcome solve(Rhs&& f, double t0, std::vector<double> y, double t_end, const Control& c,
              SampleFn&& sample, CheckFn&& check, FinalFn&& final, StepFn&& on_step) {
  c.validate();
  const std::size_t n = y.size();
  Outcome out;
  out.t = t0;
  detail::Sampler smp{t0, t_end, c.sample_interval};
  sample(t0, y);
  if (!(t_end > t0)) return out;

  std::vector<double> fy(n), y1(n), f1(n), buf(n);
  f(t0, y.data(), fy.data());
  double t = t0;

  if (c.method == Method::RK4) {
    std::vector<double> k2(n), k3(n), k4(n), tmp(n);
    // integer step count keeps the grid free of accumulated drift
    const double span = t_end - t0;
    const long steps = std::max<long>(1, static_cast<long>(std::ceil(span / c.dt - 1e-9)));
    if (steps > c.max_steps) {
      out.stop = Stop::StepLimit;
      return out;
    }
    for (long k = 0; k < steps; ++k) {
      const double ta = t0 + span * static_cast<double>(k) / static_cast<double>(steps);
      const double tb = k + 1 == steps ? t_end : t0 + span * static_cast<double>(k + 1) / static_cast<double>(steps);
      const double h = tb - ta;
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * fy[i];
      f(ta + 0.5 * h, tmp.data(), k2.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      f(ta + 0.5 * h, tmp.data(), k3.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
      f(tb, tmp.data(), k4.data());
      for (std::size_t i = 0; i < n; ++i)
        y1[i] = y[i] + h / 6.0 * (fy[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      const int code = check(tb, y1);
      if (code > 0) {
        out.stop = Stop::Check;
        out.check_code = code;
        return out;
      }
      f(tb, y1.data(), f1.data());
      on_step(ta, h, y, fy, y1, f1);
      detail::emit(smp, ta, h, y, fy, y1, f1, buf, sample);
      if (code < 0) {
        out.stop = Stop::Check;
        out.check_code = code;
        out.t = tb;
        ++out.accepted;
        final(tb, y1);
        return out;
      }
      y.swap(y1);
      fy.swap(f1);
      out.t = tb;
      ++out.accepted;
    }
    return out;
  }

  // Dormand-Prince 5(4), first same as last.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<double> k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n);
  auto norm = [&](const std::vector<double>& v, const std::vector<double>& ref) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = c.atol + c.rtol * std::abs(ref[i]);
      s += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(s / static_cast<double>(n));
  };

  // Initial step after Hairer, Norsett & Wanner.
  double h;
  {
    const double d0 = norm(y, y);
    const double d1 = norm(fy, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end - t0);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h0 * fy[i];
    f(t0 + h0, tmp.data(), k2.data());
    for (std::size_t i = 0; i < n; ++i) k3[i] = k2[i] - fy[i];
    const double d2 = norm(k3, y) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min({100.0 * h0, h1, c.max_step});
  }

  bool rejected_last = false;
  while (t < t_end) {
    if (out.accepted + out.rejected >= c.max_steps) {
      out.stop = Stop::StepLimit;
      return out;
    }
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (!last && (h < c.min_step || h < 16.0 * std::numeric_limits<double>::epsilon() * std::abs(t))) {
      out.stop = Stop::StepUnderflow;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * fy[i];
    f(t + c2 * h, tmp.data(), k2.data());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * fy[i] + a32 * k2[i]);
    f(t + c3 * h, tmp.data(), k3.data());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * fy[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp.data(), k4.data());
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a51 * fy[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp.data(), k5.data());
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a61 * fy[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double tn = last ? t_end : t + h;
    f(tn, tmp.data(), k6.data());
    for (std::size_t i = 0; i < n; ++i)
      y1[i] = y[i] + h * (b1 * fy[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(tn, y1.data(), f1.data());

    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      tmp[i] = h * (e1 * fy[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * f1[i]);
      k2[i] = std::max(std::abs(y[i]), std::abs(y1[i]));
      finite = finite && std::isfinite(y1[i]) && std::isfinite(f1[i]);
    }
    const double err = finite ? norm(tmp, k2) : std::numeric_limits<double>::infinity();

    if (err <= 1.0) {
      const int code = check(tn, y1);
      if (code > 0) {
        out.stop = Stop::Check;
        out.check_code = code;
        return out;
      }
      on_step(t, h, y, fy, y1, f1);
      detail::emit(smp, t, h, y, fy, y1, f1, buf, sample);
      if (code < 0) {
        out.stop = Stop::Check;
        out.check_code = code;
        out.t = tn;
        ++out.accepted;
        final(tn, y1);
        return out;
      }
      t = tn;
      y.swap(y1);
      fy.swap(f1);
      out.t = t;
      ++out.accepted;
      double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (rejected_last) fac = std::min(fac, 1.0);
      rejected_last = false;
      h = std::min(h * fac, c.max_step);
    } else {
      ++out.rejected;
      rejected_last = true;
      h *= std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
    }
  }
  return out;
}

template <class Rhs, class SampleFn, class CheckFn, class FinalFn>
Outcome solve(Rhs&& f, double t0, std::vector<double> y, double t_end, const Control& c,
              SampleFn&& sample, CheckFn&& check, FinalFn&& final) {
  return solve(f, t0, std::move(y), t_end, c, sample, check, final,
               [](double, double, const std::vector<double>&, const std::vector<double>&,
                  const std::vector<double>&, const std::vector<double>&) {});
}

}  // namespace qmoment::ode
