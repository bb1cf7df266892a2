#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/closure.hpp"
#include "qmoment/model.hpp"
#include "qmoment/ode.hpp"

namespace qmoment {

struct MomentState {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var = 0.0;
  double var_rate = 0.0;
  std::optional<double> mean_h;
  double t = 0.0;

  bool operator==(const MomentState&) const = default;
};

struct StateDerivative {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var = 0.0;
  double var_rate = 0.0;
  std::optional<double> mean_h;
};

/// Throws NumericalFailure if st.var <= 0 or a term evaluates non-finite.
/// A driven system needs st.mean_h.
StateDerivative rhs_eval(const ClosedSystem& sys, const MomentState& st, double t);

enum class RunStatus { Completed, VarianceCollapse, Stiffness, NonFinite, Runaway, StepLimit };
std::string_view to_string(RunStatus s);

struct IntegrateOptions {
  ode::Control control;
  double var_floor = 1e-12;
  /// Abort (status Runaway) once |<x>| exceeds this; used to stop escapes.
  double runaway_bound = std::numeric_limits<double>::infinity();
  /// Records e(t) - e(0) for undriven systems.
  bool energy_channel = true;
  /// Records confinement_probability(state, b) when set.
  std::optional<double> confinement_barrier;
  /// Locates the first |<x>| = b crossing on the accepted steps themselves,
  /// independent of the sample grid.
  std::optional<double> escape_barrier;
};

struct TrajectoryMeta {
  ode::Method method = ode::Method::DormandPrince45;
  double dt = 0.0;
  double rtol = 0.0;
  double atol = 0.0;
  long steps = 0;
  long rejected = 0;
  double wall_seconds = 0.0;
};

struct TrajectoryRecord {
  std::vector<MomentState> states;      // state.t is the sample time
  std::vector<double> energy_residual;  // empty when not recorded
  std::vector<double> confinement;      // empty when not requested
  /// Off-grid state where a Runaway abort happened.
  std::optional<MomentState> final_state;
  std::optional<double> escape_barrier;
  std::optional<double> crossing_time;  // first step-level |<x>| = escape_barrier
  bool driven = false;
  RunStatus status = RunStatus::Completed;
  std::string message;
  TrajectoryMeta meta;

  bool completed() const noexcept { return status == RunStatus::Completed; }
  std::size_t size() const noexcept { return states.size(); }
  std::vector<double> times() const;
  std::vector<double> channel(double MomentState::*member) const;
};

/// Integrates from st0 (st0.t is the start time) to t_end. Aborts return the
/// partial trajectory with the status set; nothing is thrown for them.
TrajectoryRecord integrate(const ClosedSystem& sys, const MomentState& st0, double t_end,
                           const IntegrateOptions& opts = {});

/// First t in [t0, t0 + h] where the Hermite cubic through (x0, v0), (x1, v1)
/// reaches |x| = b on the side of x1, by bisection.
double hermite_crossing(double t0, double h, double x0, double v0, double x1, double v1, double b);

/// Independent integrations of one shared system, run in parallel.
std::vector<TrajectoryRecord> integrate_many(const ClosedSystem& sys,
                                             const std::vector<MomentState>& starts, double t_end,
                                             const IntegrateOptions& opts = {});

struct ClassicalState {
  double x = 0.0;
  double p = 0.0;
  double t = 0.0;

  bool operator==(const ClassicalState&) const = default;
};

struct ClassicalTrajectory {
  std::vector<ClassicalState> states;
  std::optional<ClassicalState> final_state;
  RunStatus status = RunStatus::Completed;
  std::string message;
  TrajectoryMeta meta;

  bool completed() const noexcept { return status == RunStatus::Completed; }
};

double classical_energy(const PolynomialPotential& pot, const ClassicalState& st);

/// x'' = -V'(x, t) with the same kernels.
ClassicalTrajectory integrate_classical(const PolynomialPotential& pot, const ClassicalState& st0,
                                        double t_end, const IntegrateOptions& opts = {});

/// `t,x_mean,p_mean,var,var_rate,h_mean,energy_residual`, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& traj);
/// `t,x,p,energy`
void write_classical_csv(std::ostream& os, const ClassicalTrajectory& traj,
                         const PolynomialPotential& pot);

std::string format_number(double v);

}  // namespace qmoment
