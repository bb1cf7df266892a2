#include "qmoment/dynamics.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fmt/format.h>
#include <ostream>

#include "qmoment/error.hpp"
#include "qmoment/observables.hpp"

namespace qmoment {

namespace ode {

std::string_view to_string(Method m) {
  return m == Method::RK4 ? "rk4" : "dopri45";
}

Method parse_method(std::string_view text) {
  if (text == "rk4") return Method::RK4;
  if (text == "dopri45" || text == "adaptive") return Method::DormandPrince45;
  throw ConfigError(fmt::format("unknown integrator '{}' (rk4 | dopri45)", text));
}

void Control::validate() const {
  if (method == Method::RK4 && !(dt > 0.0 && std::isfinite(dt)))
    throw ConstructionError("rk4 step dt must be positive");
  if (method == Method::DormandPrince45 && !(rtol > 0.0 && atol > 0.0))
    throw ConstructionError("integrator tolerances must be positive");
  if (!(sample_interval > 0.0) || !std::isfinite(sample_interval))
    throw ConstructionError("sample interval must be positive");
  if (!(min_step > 0.0) || !(max_step > 0.0)) throw ConstructionError("step bounds must be positive");
  if (max_steps <= 0) throw ConstructionError("max_steps must be positive");
}

}  // namespace ode

namespace {

// Runaway keeps the samples of the step that tripped it.
enum CheckCode { kOk = 0, kCollapse = 1, kNonFinite = 2, kRunaway = -3 };

std::vector<double> pack(const ClosedSystem& sys, const MomentState& st) {
  std::vector<double> y{st.mean_x, st.mean_p, st.var, st.var_rate};
  if (sys.driven()) {
    if (!st.mean_h) throw ConstructionError("the driven system needs an initial <H>");
    y.push_back(*st.mean_h);
  }
  return y;
}

MomentState unpack(const ClosedSystem& sys, double t, const double* y) {
  MomentState st{y[0], y[1], y[2], y[3], std::nullopt, t};
  if (sys.driven()) st.mean_h = y[4];
  return st;
}

TrajectoryMeta meta_of(const ode::Control& c) {
  TrajectoryMeta m;
  m.method = c.method;
  if (c.method == ode::Method::RK4) {
    m.dt = c.dt;
  } else {
    m.rtol = c.rtol;
    m.atol = c.atol;
  }
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::VarianceCollapse: return "variance collapse";
    case RunStatus::Stiffness: return "stiffness";
    case RunStatus::NonFinite: return "non-finite";
    case RunStatus::Runaway: return "runaway";
    case RunStatus::StepLimit: return "step limit";
  }
  return "?";
}

StateDerivative rhs_eval(const ClosedSystem& sys, const MomentState& st, double t) {
  if (!(st.var > 0.0)) throw NumericalFailure(fmt::format("variance must be positive, got {}", st.var));
  const std::vector<double> y = pack(sys, st);
  double dy[5] = {};
  sys.evaluate(t, y.data(), dy);
  StateDerivative d{dy[0], dy[1], dy[2], dy[3], std::nullopt};
  if (sys.driven()) d.mean_h = dy[4];
  return d;
}

std::vector<double> TrajectoryRecord::times() const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.t);
  return out;
}

std::vector<double> TrajectoryRecord::channel(double MomentState::*member) const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.*member);
  return out;
}

double hermite_crossing(double t0, double h, double x0, double v0, double x1, double v1, double b) {
  const double target = x1 > 0 ? b : -b;
  auto g = [&](double t) {
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double x = (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * v0 + (-2 * s3 + 3 * s2) * x1 +
                     (s3 - s2) * h * v1;
    return target > 0 ? x - target : target - x;
  };
  double lo = t0, hi = t0 + h;
  if (g(lo) > 0) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? hi : lo) = mid;
  }
  return hi;
}

TrajectoryRecord integrate(const ClosedSystem& sys, const MomentState& st0, double t_end,
                           const IntegrateOptions& opts) {
  opts.control.validate();
  if (!(t_end > st0.t)) throw ConstructionError("t_end must exceed the start time");
  if (!(st0.var > opts.var_floor))
    throw ConstructionError(fmt::format("initial variance {} is not above the floor {}", st0.var, opts.var_floor));
  const auto start = std::chrono::steady_clock::now();

  TrajectoryRecord rec;
  rec.driven = sys.driven();
  rec.meta = meta_of(opts.control);
  const bool energy = opts.energy_channel && !sys.driven();
  double e0 = 0.0;
  double dy[5];

  auto rhs = [&](double t, const double* y, double* out) { sys.evaluate_unchecked(t, y, out); };
  auto sample = [&](double t, const std::vector<double>& y) {
    rec.states.push_back(unpack(sys, t, y.data()));
    if (energy) {
      sys.evaluate_unchecked(t, y.data(), dy);
      const double e = sys.reconstruct_energy(t, y.data(), dy[3]);
      if (rec.energy_residual.empty()) e0 = e;
      rec.energy_residual.push_back(e - e0);
    }
    if (opts.confinement_barrier)
      rec.confinement.push_back(confinement_probability(rec.states.back(), *opts.confinement_barrier));
  };
  auto check = [&](double t, const std::vector<double>& y) -> int {
    for (double v : y)
      if (!std::isfinite(v)) {
        rec.message = fmt::format("non-finite state at t = {}", t);
        return kNonFinite;
      }
    try {
      sys.evaluate(t, y.data(), dy);
    } catch (const NumericalFailure& err) {
      rec.message = fmt::format("{} at t = {}", err.what(), t);
      return kNonFinite;
    }
    if (y[2] <= opts.var_floor) {
      rec.message = fmt::format("variance {:.6g} reached the floor {:.3g} at t = {:.10g}", y[2], opts.var_floor, t);
      return kCollapse;
    }
    if (std::abs(y[0]) > opts.runaway_bound) {
      rec.message = fmt::format("|<x>| exceeded {:.6g} at t = {:.10g}", opts.runaway_bound, t);
      return kRunaway;
    }
    return kOk;
  };

  auto final = [&](double t, const std::vector<double>& y) { rec.final_state = unpack(sys, t, y.data()); };
  rec.escape_barrier = opts.escape_barrier;
  if (opts.escape_barrier && std::abs(st0.mean_x) > *opts.escape_barrier) rec.crossing_time = st0.t;
  auto on_step = [&](double t, double h, const std::vector<double>& y0, const std::vector<double>& f0,
                     const std::vector<double>& y1, const std::vector<double>& f1) {
    if (!opts.escape_barrier || rec.crossing_time || !(std::abs(y1[0]) > *opts.escape_barrier)) return;
    rec.crossing_time = hermite_crossing(t, h, y0[0], f0[0], y1[0], f1[0], *opts.escape_barrier);
  };
  const ode::Outcome out =
      ode::solve(rhs, st0.t, pack(sys, st0), t_end, opts.control, sample, check, final, on_step);
  rec.meta.steps = out.accepted;
  rec.meta.rejected = out.rejected;
  switch (out.stop) {
    case ode::Stop::Completed: rec.status = RunStatus::Completed; break;
    case ode::Stop::StepUnderflow:
      rec.status = RunStatus::Stiffness;
      rec.message = fmt::format("step size underflow at t = {:.10g}", out.t);
      break;
    case ode::Stop::StepLimit:
      rec.status = RunStatus::StepLimit;
      rec.message = fmt::format("step limit reached at t = {:.10g}", out.t);
      break;
    case ode::Stop::Check:
      rec.status = out.check_code == kCollapse   ? RunStatus::VarianceCollapse
                   : out.check_code == kRunaway ? RunStatus::Runaway
                                                : RunStatus::NonFinite;
      break;
  }
  rec.meta.wall_seconds = seconds_since(start);
  return rec;
}

std::vector<TrajectoryRecord> integrate_many(const ClosedSystem& sys,
                                             const std::vector<MomentState>& starts, double t_end,
                                             const IntegrateOptions& opts) {
  std::vector<TrajectoryRecord> out(starts.size());
  std::exception_ptr failure;
  const long n = static_cast<long>(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = integrate(sys, starts[i], t_end, opts);
    } catch (...) {
#pragma omp critical(qmoment_integrate_many)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double classical_energy(const PolynomialPotential& pot, const ClassicalState& st) {
  return 0.5 * st.p * st.p + pot.value(st.x, st.t);
}

ClassicalTrajectory integrate_classical(const PolynomialPotential& pot, const ClassicalState& st0,
                                        double t_end, const IntegrateOptions& opts) {
  opts.control.validate();
  if (!(t_end > st0.t)) throw ConstructionError("t_end must exceed the start time");
  const auto start = std::chrono::steady_clock::now();
  ClassicalTrajectory tr;
  tr.meta = meta_of(opts.control);

  auto rhs = [&](double t, const double* y, double* out) {
    out[0] = y[1];
    out[1] = pot.force(y[0], t);
  };
  auto sample = [&](double t, const std::vector<double>& y) { tr.states.push_back({y[0], y[1], t}); };
  auto check = [&](double t, const std::vector<double>& y) -> int {
    if (!std::isfinite(y[0]) || !std::isfinite(y[1])) {
      tr.message = fmt::format("non-finite state at t = {}", t);
      return kNonFinite;
    }
    if (std::abs(y[0]) > opts.runaway_bound) {
      tr.message = fmt::format("|x| exceeded {:.6g} at t = {:.10g}", opts.runaway_bound, t);
      return kRunaway;
    }
    return kOk;
  };
  auto final = [&](double t, const std::vector<double>& y) { tr.final_state = ClassicalState{y[0], y[1], t}; };
  const ode::Outcome out =
      ode::solve(rhs, st0.t, {st0.x, st0.p}, t_end, opts.control, sample, check, final);
  tr.meta.steps = out.accepted;
  tr.meta.rejected = out.rejected;
  switch (out.stop) {
    case ode::Stop::Completed: tr.status = RunStatus::Completed; break;
    case ode::Stop::StepUnderflow:
      tr.status = RunStatus::Stiffness;
      tr.message = fmt::format("step size underflow at t = {:.10g}", out.t);
      break;
    case ode::Stop::StepLimit:
      tr.status = RunStatus::StepLimit;
      tr.message = fmt::format("step limit reached at t = {:.10g}", out.t);
      break;
    case ode::Stop::Check:
      tr.status = out.check_code == kRunaway ? RunStatus::Runaway : RunStatus::NonFinite;
      break;
  }
  tr.meta.wall_seconds = seconds_since(start);
  return tr;
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& traj) {
  os << "t,x_mean,p_mean,var,var_rate,h_mean,energy_residual\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const MomentState& s = traj.states[i];
    os << format_number(s.t) << ',' << format_number(s.mean_x) << ',' << format_number(s.mean_p) << ','
       << format_number(s.var) << ',' << format_number(s.var_rate) << ',';
    if (s.mean_h) os << format_number(*s.mean_h);
    os << ',';
    if (i < traj.energy_residual.size()) os << format_number(traj.energy_residual[i]);
    os << '\n';
  }
}

void write_classical_csv(std::ostream& os, const ClassicalTrajectory& traj,
                         const PolynomialPotential& pot) {
  os << "t,x,p,energy\n";
  for (const auto& s : traj.states)
    os << format_number(s.t) << ',' << format_number(s.x) << ',' << format_number(s.p) << ','
       << format_number(classical_energy(pot, s)) << '\n';
}

}  // namespace qmoment
