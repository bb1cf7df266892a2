#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "qmoment/closure.hpp"
#include "qmoment/dynamics.hpp"

namespace qmoment {

/// Gaussian mass of N(<x>, V) inside [-b, b].
double confinement_probability(const MomentState& st, double b);
double confinement_probability(double mean_x, double var, double b);

enum class EscapeCriterion { MeanCrossesBarrier, ProbabilityBelowHalf };
std::string_view to_string(EscapeCriterion c);
EscapeCriterion parse_escape_criterion(std::string_view text);

struct EscapeRecord {
  bool escaped = false;
  std::optional<double> escape_time;
  EscapeCriterion criterion = EscapeCriterion::MeanCrossesBarrier;
  double barrier_b = 0.0;
};

/// Barrier of the volcano ridge, omega / sqrt(lambda).
double volcano_barrier(const Scenario& s);

/// MeanCrossesBarrier uses the step-level crossing when traj was integrated
/// with escape_barrier == b, otherwise Hermite on the samples.
EscapeRecord escape_time(const TrajectoryRecord& traj, double b,
                         EscapeCriterion criterion = EscapeCriterion::MeanCrossesBarrier);

struct DivergenceRecord {
  double epsilon = 1.0;
  std::optional<double> divergence_time;
  std::pair<std::size_t, std::size_t> pair_ids;
};

/// Pairwise first time |<x>_i - <x>_j| > epsilon, linearly interpolated between
/// samples. Trajectories must share the sample grid over their common length.
std::vector<DivergenceRecord> divergence_time(const std::vector<TrajectoryRecord>& trajs, double epsilon);
/// Same for plain (t, x) series, e.g. classical runs.
std::optional<double> divergence_time(const std::vector<double>& t, const std::vector<double>& xa,
                                      const std::vector<double>& xb, double epsilon);
/// Earliest pairwise divergence of a bundle; nullopt when no pair separates.
std::optional<double> earliest_divergence(const std::vector<DivergenceRecord>& records);

struct VarianceStats {
  double mean = 0.0;
  double stddev = 0.0;
  double relative = 0.0;  // stddev / mean
};

VarianceStats variance_fluctuation(const TrajectoryRecord& traj);
VarianceStats series_fluctuation(const std::vector<double>& values);

struct EnergyAudit {
  bool driven = false;
  std::vector<double> t;
  /// Undriven: e(t) - e(0). Driven: numerical d<H>/dt minus
  /// -g Omega <x> sin(Omega t), central differences inside, the closed rate
  /// at the two ends.
  std::vector<double> residual;
  double max_abs = 0.0;
};

EnergyAudit energy_audit(const TrajectoryRecord& traj, const ClosedSystem& sys);
EnergyAudit energy_audit(const TrajectoryRecord& traj, const Scenario& s, const ClosureRule& rule);

}  // namespace qmoment
