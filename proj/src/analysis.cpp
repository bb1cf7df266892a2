#include "qmoment/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <numeric>

#include "qmoment/observables.hpp"

namespace qmoment {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_undriven(const ClosedSystem& sys, const char* what) {
  if (sys.driven()) throw UnsupportedError(fmt::format("{} needs an undriven system", what));
}

std::array<double, 4> pack4(const MomentState& s) { return {s.mean_x, s.mean_p, s.var, s.var_rate}; }

MomentState unpack4(const std::array<double, 4>& y) { return {y[0], y[1], y[2], y[3], std::nullopt, 0.0}; }

std::array<double, 4> rhs4(const ClosedSystem& sys, const std::array<double, 4>& y) {
  std::array<double, 4> dy{};
  sys.evaluate_unchecked(0.0, y.data(), dy.data());
  return dy;
}

double inf_norm(const std::array<double, 4>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::isfinite(x) ? std::abs(x) : std::numeric_limits<double>::infinity());
  return m;
}

struct Params {
  double w2, l, beta, b1, b2, e;
};

Params params_of(const ClosedSystem& sys) {
  const auto& s = sys.scenario();
  const auto& r = sys.rule();
  return {s.omega() * s.omega(), s.lambda(), r.beta, r.beta1, r.beta2, s.energy()};
}

// Coefficients of d^2V/dt^2 = c0 + c1 V + c2 V^2 on the displaced double-well
// branch, after eliminating <x>^2 = alpha + kappa V from d^2<x>/dt^2 = 0.
struct DisplacedQuadratic {
  double alpha, kappa, c0, c1, c2;
};

DisplacedQuadratic displaced_quadratic(const Params& p) {
  DisplacedQuadratic q;
  q.alpha = (p.w2 - p.l * p.b1) / (p.l * (1 + p.b2));
  q.kappa = -3.0 / (1 + p.b2);
  const double s = 2 * p.w2 - 10 * p.l * p.b1;
  const double quart = p.l * (1 + 10 * p.b2);
  q.c0 = 4 * p.e + s * q.alpha - quart * q.alpha * q.alpha;
  q.c1 = s * q.kappa + 4 * p.w2 - 2 * quart * q.alpha * q.kappa - 12 * p.l * q.alpha;
  q.c2 = -quart * q.kappa * q.kappa - 12 * p.l * q.kappa - 9 * p.beta * p.l;
  return q;
}

FixedPointReport make_report(FixedPointBranch b, double x, double v, bool exists, std::string condition) {
  FixedPointReport r;
  r.branch = b;
  r.location = {x, 0.0, v, 0.0, std::nullopt, 0.0};
  r.exists = exists;
  r.condition = std::move(condition);
  return r;
}

}  // namespace

std::string_view to_string(FixedPointBranch b) {
  switch (b) {
    case FixedPointBranch::QuarticCenter: return "quartic-center";
    case FixedPointBranch::VolcanoMinus: return "volcano-minus";
    case FixedPointBranch::VolcanoPlus: return "volcano-plus";
    case FixedPointBranch::DoubleWellA_plus: return "double-well-A-plus";
    case FixedPointBranch::DoubleWellA_minus: return "double-well-A-minus";
    case FixedPointBranch::DoubleWellB_minus: return "double-well-B-minus";
    case FixedPointBranch::DoubleWellB_plus: return "double-well-B-plus";
    case FixedPointBranch::NumericNewton: return "newton";
  }
  return "?";
}

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Centre: return "centre";
    case Stability::Saddle: return "saddle";
    case Stability::Mixed: return "mixed";
    case Stability::Degenerate: return "degenerate";
  }
  return "?";
}

std::string_view to_string(FrequencyMethod m) {
  return m == FrequencyMethod::ZeroCrossings ? "zero-crossings" : "fourier-peak";
}

double rhs_residual(const ClosedSystem& sys, const MomentState& st) {
  require_undriven(sys, "rhs_residual");
  return inf_norm(rhs4(sys, pack4(st)));
}

Stability classify(const std::vector<std::complex<double>>& ev, double tol) {
  bool centre = true, mixed = false;
  for (const auto& z : ev) {
    if (std::abs(z) < tol) return Stability::Degenerate;
    const bool re = std::abs(z.real()) > tol;
    const bool im = std::abs(z.imag()) > tol;
    if (re) centre = false;
    if (re && im) mixed = true;
  }
  if (centre) return Stability::Centre;
  return mixed ? Stability::Mixed : Stability::Saddle;
}

std::vector<std::complex<double>> general_eigenvalues(const Matrix4& J) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = J[i][j];
  Eigen::EigenSolver<Eigen::Matrix4d> solver(m, false);
  if (solver.info() != Eigen::Success) throw NumericalFailure("eigenvalue iteration did not converge");
  std::vector<std::complex<double>> ev(4);
  for (int i = 0; i < 4; ++i) ev[i] = solver.eigenvalues()(i);
  return ev;
}

Linearization linearize(const ClosedSystem& sys, const MomentState& at) {
  require_undriven(sys, "linearize");
  Linearization lin;
  const auto y = pack4(at);
  std::array<double, kSlotCount> slots{};
  sys.fill_slots(0.0, y.data(), slots.data());
  constexpr StateVar vars[4] = {StateVar::MeanX, StateVar::MeanP, StateVar::Var, StateVar::VarRate};
  auto& J = lin.jacobian;
  J[0] = {0, 1, 0, 0};
  J[2] = {0, 0, 0, 1};
  for (int eq = 0; eq < 2; ++eq)
    for (int k = 0; k < 4; ++k)
      J[eq == 0 ? 1 : 3][k] = sym::CompiledPoly(sys.accel_partial(eq, vars[k]), slot_of).evaluate(slots.data());

  const double ax = J[1][0], av = J[1][2], bx = J[3][0], bv = J[3][2];
  lin.block_trace = ax + bv;
  lin.block_det = ax * bv - av * bx;
  const double scale = std::max({1.0, std::abs(ax), std::abs(av), std::abs(bx), std::abs(bv)});
  const bool second_order = std::abs(J[1][1]) <= 1e-14 * scale && std::abs(J[1][3]) <= 1e-14 * scale &&
                            std::abs(J[3][1]) <= 1e-14 * scale && std::abs(J[3][3]) <= 1e-14 * scale;

  if (second_order) {
    // eigenvalues are +-sqrt(mu), mu^2 - tr mu + det = 0
    lin.from_block = true;
    const double tr = lin.block_trace, det = lin.block_det;
    const double disc = tr * tr - 4 * det;
    std::complex<double> mu1, mu2;
    if (disc >= 0) {
      const double q = 0.5 * (tr + std::copysign(std::sqrt(disc), tr));
      mu1 = q;
      mu2 = q != 0.0 ? det / q : 0.0;
    } else {
      const double im = 0.5 * std::sqrt(-disc);
      mu1 = {0.5 * tr, im};
      mu2 = {0.5 * tr, -im};
    }
    for (const auto& mu : {mu1, mu2}) {
      const std::complex<double> r = std::sqrt(mu);
      lin.eigenvalues.push_back(r);
      lin.eigenvalues.push_back(-r);
    }
  } else {
    lin.eigenvalues = general_eigenvalues(J);
  }
  std::sort(lin.eigenvalues.begin(), lin.eigenvalues.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  lin.classification = classify(lin.eigenvalues);
  for (const auto& z : lin.eigenvalues)
    if (std::abs(z.real()) <= kClassifyTol && z.imag() > kClassifyTol) lin.linear_frequencies.push_back(z.imag());
  std::sort(lin.linear_frequencies.begin(), lin.linear_frequencies.end());
  return lin;
}

Linearization linearize(const ClosedSystem& sys, const FixedPointReport& at) {
  if (!at.exists) throw ConstructionError(fmt::format("branch {} does not exist", to_string(at.branch)));
  return linearize(sys, at.location);
}

std::vector<FixedPointReport> analytic_fixed_points(const ClosedSystem& sys) {
  require_undriven(sys, "analytic_fixed_points");
  const Params p = params_of(sys);
  const double w4 = p.w2 * p.w2;
  const double bl = p.beta * p.l;
  std::vector<FixedPointReport> out;

  switch (sys.scenario().kind()) {
    case ScenarioKind::Quartic: {
      // 9 beta l V^2 + 4 w^2 V - 4e = 0, positive root in cancellation-free form
      const double root = std::sqrt(16 * w4 + 144 * bl * p.e);
      const double denom = 4 * p.w2 + root;
      const bool ok = p.e > 0 && denom > 0;
      out.push_back(make_report(FixedPointBranch::QuarticCenter, 0.0, ok ? 8 * p.e / denom : kNaN, ok, "e > 0"));
      break;
    }
    case ScenarioKind::Volcano: {
      const double disc = 1 - 9 * bl * p.e / w4;
      const double crit = w4 / (9 * bl);
      for (int sign : {-1, +1}) {
        const double v = disc >= 0 ? 2 * p.w2 / (9 * bl) * (1 + sign * std::sqrt(disc)) : kNaN;
        const bool ok = disc >= 0 && v > 0;
        const std::string cond = sign < 0 ? fmt::format("0 < e <= w^4/(9 beta lambda) = {:.6g}", crit)
                                          : fmt::format("e <= w^4/(9 beta lambda) = {:.6g}", crit);
        out.push_back(make_report(sign < 0 ? FixedPointBranch::VolcanoMinus : FixedPointBranch::VolcanoPlus, 0.0,
                                  v, ok, cond));
      }
      break;
    }
    case ScenarioKind::DoubleWell: {
      const double disc = 1 + 9 * bl * p.e / w4;
      const double crit = -w4 / (9 * bl);
      for (int sign : {+1, -1}) {
        const double v = disc >= 0 ? 2 * p.w2 / (9 * bl) * (1 + sign * std::sqrt(disc)) : kNaN;
        const bool ok = disc >= 0 && v > 0;
        const std::string cond = sign > 0 ? fmt::format("e >= -w^4/(9 beta lambda) = {:.6g}", crit)
                                          : fmt::format("{:.6g} <= e < 0", crit);
        out.push_back(make_report(sign > 0 ? FixedPointBranch::DoubleWellA_plus : FixedPointBranch::DoubleWellA_minus,
                                  0.0, v, ok, cond));
      }
      const auto q = displaced_quadratic(p);
      const double d = q.c1 * q.c1 - 4 * q.c2 * q.c0;
      double roots[2] = {kNaN, kNaN};
      if (d >= 0 && q.c2 != 0.0) {
        const double t = -0.5 * (q.c1 + std::copysign(std::sqrt(d), q.c1));
        roots[0] = t / q.c2;
        roots[1] = t != 0.0 ? q.c0 / t : 0.0;
        if (roots[0] > roots[1]) std::swap(roots[0], roots[1]);
      }
      const double e_crit = (q.c1 * q.c1 / (4 * q.c2) - (q.c0 - 4 * p.e)) / 4;
      const bool gaussian = p.beta == 1.0 && p.b1 == 0.0 && p.b2 == 0.0;
      for (int k = 0; k < 2; ++k) {
        const double v = roots[k];
        const double a2 = q.alpha + q.kappa * v;
        const bool ok = std::isfinite(v) && v > 0 && a2 > 0;
        auto r = make_report(k == 0 ? FixedPointBranch::DoubleWellB_minus : FixedPointBranch::DoubleWellB_plus,
                             ok ? std::sqrt(a2) : kNaN, v, ok,
                             fmt::format("e <= {:.6g} (e_bar <= {:.6g}), V > 0, <x>^2 > 0", e_crit,
                                         e_crit + w4 / (4 * p.l)));
        if (ok && gaussian) {
          r.trace_condition = 5 * p.w2 - 12 * p.l * v > 0;
          r.det_condition = (p.w2 - 3 * p.l * v) * (2 * p.w2 - 9 * p.l * v) > 0;
        }
        out.push_back(std::move(r));
      }
      break;
    }
    case ScenarioKind::DrivenDoubleWell: break;
  }
  for (auto& r : out)
    if (r.exists) r.linear = linearize(sys, r.location);
  return out;
}

FixedPointReport newton_fixed_point(const ClosedSystem& sys, const MomentState& guess, int max_iterations) {
  require_undriven(sys, "newton_fixed_point");
  if (!(guess.var > 0.0)) throw ConstructionError("Newton guess needs a positive variance");
  auto y = pack4(guess);
  auto f = rhs4(sys, y);
  double res = inf_norm(f);
  int it = 0;
  for (; res >= kNewtonTol; ++it) {
    if (it >= max_iterations)
      throw NewtonFailure(fmt::format("Newton did not converge in {} iterations (residual {:.3g})", max_iterations, res),
                          unpack4(y), res);
    if (!std::isfinite(res)) throw NewtonFailure("non-finite rhs during Newton iteration", unpack4(y), res);

    Eigen::Matrix4d J;
    for (int j = 0; j < 4; ++j) {
      auto yh = y;
      const double h = std::max(1e-7, 1e-7 * std::abs(y[j]));
      yh[j] += h;
      const auto fh = rhs4(sys, yh);
      for (int i = 0; i < 4; ++i) J(i, j) = (fh[i] - f[i]) / h;
    }
    const Eigen::Vector4d rhs(-f[0], -f[1], -f[2], -f[3]);
    const Eigen::Vector4d step = J.colPivHouseholderQr().solve(rhs);

    double damp = 1.0;
    std::array<double, 4> trial{};
    std::array<double, 4> ftrial{};
    double rtrial = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 40; ++k, damp *= 0.5) {
      for (int i = 0; i < 4; ++i) trial[i] = y[i] + damp * step(i);
      if (!(trial[2] > 0.0)) continue;
      ftrial = rhs4(sys, trial);
      rtrial = inf_norm(ftrial);
      if (rtrial < res) break;
    }
    if (!(trial[2] > 0.0) || !std::isfinite(rtrial))
      throw NewtonFailure("Newton step left the positive-variance region", unpack4(y), res);
    y = trial;
    f = ftrial;
    res = rtrial;
  }
  FixedPointReport r;
  r.branch = FixedPointBranch::NumericNewton;
  r.location = unpack4(y);
  r.exists = true;
  r.iterations = it;
  r.condition = fmt::format("Newton converged in {} iterations, residual {:.3g}", it, res);
  r.linear = linearize(sys, r.location);
  return r;
}

std::vector<EnergyThreshold> existence_thresholds(const Scenario& s, const ClosureRule& rule) {
  const double w2 = s.omega() * s.omega();
  const double w4 = w2 * w2;
  const double l = s.lambda();
  const double bl = rule.beta * l;
  std::vector<EnergyThreshold> out;
  switch (s.kind()) {
    case ScenarioKind::Quartic:
      out.push_back({"quartic_exist", 0.0, "centre exists for e > 0"});
      break;
    case ScenarioKind::Volcano:
      out.push_back({"volcano_exist", w4 / (9 * bl), "bound fixed points need e <= w^4/(9 beta lambda)"});
      break;
    case ScenarioKind::DoubleWell:
    case ScenarioKind::DrivenDoubleWell: {
      const double exist = -w4 / (9 * bl);
      out.push_back({"dw_A_exist", exist, "origin branches need e >= -w^4/(9 beta lambda)"});
      // centre in <x> needs V > (w^2 - lambda beta1)/(3 lambda) on the plus branch
      const double r = 1.5 * rule.beta * (1 - l * rule.beta1 / w2) - 1;
      const double stable = r > 0 ? (r * r - 1) * w4 / (9 * bl) : exist;
      out.push_back({"dw_A_stable", stable,
                     r > 0 ? "origin is a centre above this energy" : "origin is a centre wherever it exists"});
      const auto q = displaced_quadratic({w2, l, rule.beta, rule.beta1, rule.beta2, 0.0});
      const double e_crit = (q.c1 * q.c1 / (4 * q.c2) - q.c0) / 4;
      out.push_back({"dw_B_exist", e_crit,
                     fmt::format("displaced branches need e <= this (e_bar = e + w^4/(4 lambda) <= {:.6g})",
                                 e_crit + w4 / (4 * l))});
      break;
    }
  }
  return out;
}

double omega_interpolated(double omega, double lambda, double energy) {
  const double w2 = omega * omega;
  return std::sqrt(w2 * w2 + 2 * lambda * energy);
}

ClassicalPeriod classical_period(const PolynomialPotential& pot, double energy) {
  const double c2 = pot.c2(), c4 = pot.c4();
  if (c2 < 0 || c4 < 0 || (c2 == 0 && c4 == 0) || pot.driven())
    throw ConstructionError("classical period needs an undriven single well with c2, c4 >= 0");
  if (!(energy > 0.0)) throw ConstructionError(fmt::format("no oscillation at E = {} (minimum is 0)", energy));

  ClassicalPeriod cp;
  cp.energy = energy;
  const double a2 = 2 * energy / (c2 + std::sqrt(c2 * c2 + 4 * c4 * energy));
  const double a = std::sqrt(a2);
  cp.amplitude = a;
  // x = a sin(theta) removes the inverse square roots at the turning points
  auto integrand = [&](double th) {
    const double s = std::sin(th);
    return a / std::sqrt(2 * (c2 * a2 + c4 * a2 * a2 * (1 + s * s)));
  };
  cp.period = 4 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, std::numbers::pi / 2,
                                                                                 15, 1e-15);
  cp.omega_sq = std::pow(2 * std::numbers::pi / cp.period, 2);

  const double w2 = 2 * c2, w = std::sqrt(w2), l = 4 * c4;
  if (w > 0) {
    cp.small_lambda_period = 2 * std::numbers::pi / w * (1 - 0.75 * l * energy / (w2 * w2));
    cp.small_lambda_omega_sq = w2 * (1 + 1.5 * l * energy / (w2 * w2));
  } else {
    cp.small_lambda_period = cp.small_lambda_omega_sq = kNaN;
  }
  if (l > 0) {
    cp.quartic_period = std::tgamma(0.5) * std::tgamma(0.25) / (std::tgamma(0.75) * std::pow(l * energy, 0.25));
    cp.quartic_omega_sq = std::pow(2 * std::numbers::pi / cp.quartic_period, 2);
  } else {
    cp.quartic_period = cp.quartic_omega_sq = kNaN;
  }
  cp.interpolated_omega_sq = omega_interpolated(w, l, energy);
  return cp;
}

ShapeInvariantPacket shape_invariant_variance(const Scenario& s) {
  if (s.kind() != ScenarioKind::Quartic || s.omega() != 0.0 || !(s.lambda() > 0.0))
    throw ConstructionError("shape-invariant packet is defined for the pure quartic");
  ShapeInvariantPacket p;
  p.vbar = std::cbrt(1.0 / 12.0);
  const double v = p.vbar;
  p.residual = 2.25 * v * v - 1.0 / (8.0 * v) - 0.75 * v * v;
  p.variance = std::cbrt(s.hbar() * s.hbar() / (12.0 * s.lambda()));
  p.width_sq = 2 * p.variance;
  p.energy = 2.25 * s.lambda() * p.variance * p.variance;
  p.note = fmt::format("vbar^3 = 1/12 gives vbar = {:.6f}; 1/12 itself is {:.6f}", v, 1.0 / 12.0);
  return p;
}

double fourier_peak_frequency(const std::vector<double>& t, const std::vector<double>& x) {
  const std::size_t n = std::min(t.size(), x.size());
  if (n < 4) throw ConstructionError("Fourier peak needs at least four samples");
  const double t0 = t.front(), span = t[n - 1] - t0;
  if (!(span > 0)) throw ConstructionError("Fourier peak needs a positive time span");
  const double mean = std::accumulate(x.begin(), x.begin() + static_cast<long>(n), 0.0) / static_cast<double>(n);
  std::vector<double> w(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * (t[k] - t0) / span);
    w[k] = s * s;  // Hann window
    y[k] = (x[k] - mean) * w[k];
  }
  auto power = [&](double om) {
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      re += y[k] * std::cos(om * t[k]);
      im -= y[k] * std::sin(om * t[k]);
    }
    return re * re + im * im;
  };
  const double lo = 2 * std::numbers::pi / span;
  const double hi = std::numbers::pi * static_cast<double>(n - 1) / span;
  const int grid = static_cast<int>(std::clamp((hi - lo) / (std::numbers::pi / (4 * span)), 16.0, 4000.0));
  const double dw = (hi - lo) / grid;
  double best = lo, best_p = -1.0;
  for (int k = 0; k <= grid; ++k) {
    const double om = lo + k * dw;
    const double pw = power(om);
    if (pw > best_p) {
      best_p = pw;
      best = om;
    }
  }
  // golden section on the bracketing cell
  constexpr double g = 0.6180339887498949;
  double a = std::max(lo, best - dw), b = std::min(hi, best + dw);
  double c = b - g * (b - a), d = a + g * (b - a);
  double pc = power(c), pd = power(d);
  for (int it = 0; it < 100 && b - a > 1e-13 * best; ++it) {
    if (pc > pd) {
      b = d;
      d = c;
      pd = pc;
      c = b - g * (b - a);
      pc = power(c);
    } else {
      a = c;
      c = d;
      pc = pd;
      d = a + g * (b - a);
      pd = power(d);
    }
  }
  return 0.5 * (a + b);
}

FrequencyEstimate measure_frequency(const std::vector<double>& t, const std::vector<double>& x,
                                    const std::vector<double>& v) {
  const std::size_t n = std::min(t.size(), x.size());
  if (n < 2) throw ConstructionError("frequency measurement needs at least two samples");
  const bool hermite = v.size() >= n;
  const double c = std::accumulate(x.begin(), x.begin() + static_cast<long>(n), 0.0) / static_cast<double>(n);
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = x[i] - c, b = x[i + 1] - c;
    if ((a < 0) == (b < 0)) continue;
    const double h = t[i + 1] - t[i];
    crossings.push_back(hermite ? hermite_crossing(t[i], h, a, v[i], b, v[i + 1], 0.0)
                                : t[i] + h * a / (a - b));
  }
  FrequencyEstimate est;
  est.crossings = static_cast<int>(crossings.size());
  if (crossings.size() >= 3) {
    std::vector<double> half(crossings.size() - 1);
    for (std::size_t k = 0; k + 1 < crossings.size(); ++k) half[k] = crossings[k + 1] - crossings[k];
    const auto st = series_fluctuation(half);
    if (st.stddev <= 0.2 * st.mean) {
      est.method = FrequencyMethod::ZeroCrossings;
      est.frequency = std::numbers::pi * static_cast<double>(half.size()) / (crossings.back() - crossings.front());
      return est;
    }
  }
  est.method = FrequencyMethod::FourierPeak;
  est.frequency = fourier_peak_frequency(t, x);
  return est;
}

FrequencyEstimate measure_frequency(const TrajectoryRecord& traj) {
  return measure_frequency(traj.times(), traj.channel(&MomentState::mean_x), traj.channel(&MomentState::mean_p));
}

}  // namespace qmoment
