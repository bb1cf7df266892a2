#include "qmoment/observables.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>

#include "qmoment/error.hpp"

namespace qmoment {

double confinement_probability(double mean_x, double var, double b) {
  if (!(var > 0.0)) throw ConstructionError("confinement probability needs a positive variance");
  if (!(b > 0.0)) throw ConstructionError("barrier b must be positive");
  if (std::isinf(b)) return 1.0;
  const double s = std::sqrt(2.0 * var);
  const double u = (b - mean_x) / s;
  const double w = (b + mean_x) / s;
  // complementary form keeps precision when the packet sits well inside
  if (u > 0.0 && w > 0.0) return std::clamp(1.0 - 0.5 * (std::erfc(u) + std::erfc(w)), 0.0, 1.0);
  return std::clamp(0.5 * (std::erf(u) + std::erf(w)), 0.0, 1.0);
}

double confinement_probability(const MomentState& st, double b) {
  return confinement_probability(st.mean_x, st.var, b);
}

std::string_view to_string(EscapeCriterion c) {
  return c == EscapeCriterion::MeanCrossesBarrier ? "mean-crosses-barrier" : "probability-below-half";
}

EscapeCriterion parse_escape_criterion(std::string_view text) {
  if (text == "mean-crosses-barrier") return EscapeCriterion::MeanCrossesBarrier;
  if (text == "probability-below-half") return EscapeCriterion::ProbabilityBelowHalf;
  throw ConfigError(fmt::format("unknown escape criterion '{}'", text));
}

double volcano_barrier(const Scenario& s) {
  if (s.lambda() == 0.0) return std::numeric_limits<double>::infinity();
  return s.omega() / std::sqrt(s.lambda());
}


EscapeRecord escape_time(const TrajectoryRecord& traj, double b, EscapeCriterion criterion) {
  EscapeRecord rec;
  rec.criterion = criterion;
  rec.barrier_b = b;
  if (traj.states.empty() || std::isinf(b)) return rec;
  std::vector<MomentState> pts = traj.states;
  if (traj.final_state && traj.final_state->t > pts.back().t) pts.push_back(*traj.final_state);

  if (criterion == EscapeCriterion::MeanCrossesBarrier) {
    if (traj.escape_barrier && *traj.escape_barrier == b) {
      rec.escaped = traj.crossing_time.has_value();
      rec.escape_time = traj.crossing_time;
      return rec;
    }
    if (std::abs(pts[0].mean_x) > b) {
      rec.escaped = true;
      rec.escape_time = pts[0].t;
      return rec;
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (std::abs(pts[i].mean_x) > b) {
        rec.escaped = true;
        const auto& a = pts[i - 1];
        const auto& c = pts[i];
        rec.escape_time = hermite_crossing(a.t, c.t - a.t, a.mean_x, a.mean_p, c.mean_x, c.mean_p, b);
        return rec;
      }
    }
    return rec;
  }

  double prev = confinement_probability(pts[0], b);
  if (prev < 0.5) {
    rec.escaped = true;
    rec.escape_time = pts[0].t;
    return rec;
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double cur = confinement_probability(pts[i], b);
    if (cur < 0.5) {
      const double frac = (prev - 0.5) / (prev - cur);
      rec.escaped = true;
      rec.escape_time = pts[i - 1].t + frac * (pts[i].t - pts[i - 1].t);
      return rec;
    }
    prev = cur;
  }
  return rec;
}

std::optional<double> divergence_time(const std::vector<double>& t, const std::vector<double>& xa,
                                      const std::vector<double>& xb, double epsilon) {
  if (!(epsilon > 0.0)) throw ConstructionError("divergence epsilon must be positive");
  const std::size_t n = std::min({t.size(), xa.size(), xb.size()});
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(xa[i] - xb[i]);
    if (d > epsilon) {
      if (i == 0) return t[0];
      const double frac = (epsilon - prev) / (d - prev);
      return t[i - 1] + frac * (t[i] - t[i - 1]);
    }
    prev = d;
  }
  return std::nullopt;
}

std::vector<DivergenceRecord> divergence_time(const std::vector<TrajectoryRecord>& trajs, double epsilon) {
  if (trajs.size() < 2) throw ConstructionError("divergence needs at least two trajectories");
  std::vector<std::vector<double>> times, xs;
  for (const auto& tr : trajs) {
    times.push_back(tr.times());
    xs.push_back(tr.channel(&MomentState::mean_x));
  }
  std::vector<DivergenceRecord> out;
  for (std::size_t i = 0; i < trajs.size(); ++i)
    for (std::size_t j = i + 1; j < trajs.size(); ++j) {
      const std::size_t n = std::min(times[i].size(), times[j].size());
      for (std::size_t k = 0; k < n; ++k)
        if (times[i][k] != times[j][k])
          throw ConstructionError(fmt::format("trajectories {} and {} have mismatched sample grids", i, j));
      DivergenceRecord rec;
      rec.epsilon = epsilon;
      rec.pair_ids = {i, j};
      rec.divergence_time = divergence_time(times[i], xs[i], xs[j], epsilon);
      out.push_back(rec);
    }
  return out;
}

std::optional<double> earliest_divergence(const std::vector<DivergenceRecord>& records) {
  std::optional<double> best;
  for (const auto& r : records)
    if (r.divergence_time && (!best || *r.divergence_time < *best)) best = r.divergence_time;
  return best;
}

VarianceStats series_fluctuation(const std::vector<double>& v) {
  if (v.empty()) throw ConstructionError("fluctuation statistics need at least one sample");
  VarianceStats s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  s.relative = s.mean != 0.0 ? s.stddev / std::abs(s.mean) : 0.0;
  return s;
}

VarianceStats variance_fluctuation(const TrajectoryRecord& traj) {
  return series_fluctuation(traj.channel(&MomentState::var));
}

EnergyAudit energy_audit(const TrajectoryRecord& traj, const ClosedSystem& sys) {
  EnergyAudit a;
  a.driven = sys.driven();
  a.t = traj.times();
  const std::size_t n = traj.states.size();
  a.residual.assign(n, 0.0);
  auto pack = [&](const MomentState& s) {
    return std::vector<double>{s.mean_x, s.mean_p, s.var, s.var_rate, s.mean_h.value_or(0.0)};
  };
  double dy[5];
  if (!a.driven) {
    double e0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = pack(traj.states[i]);
      sys.evaluate_unchecked(a.t[i], y.data(), dy);
      const double e = sys.reconstruct_energy(a.t[i], y.data(), dy[3]);
      if (i == 0) e0 = e;
      a.residual[i] = e - e0;
    }
  } else {
    const double g = sys.scenario().drive_g();
    const double om = sys.scenario().drive_omega();
    auto expected = [&](std::size_t i) {
      return -g * om * traj.states[i].mean_x * std::sin(om * a.t[i]);
    };
    for (std::size_t i = 0; i < n; ++i) {
      double rate;
      if (i == 0 || i + 1 == n) {
        const auto y = pack(traj.states[i]);
        sys.evaluate_unchecked(a.t[i], y.data(), dy);
        rate = dy[4];
      } else {
        rate = (*traj.states[i + 1].mean_h - *traj.states[i - 1].mean_h) / (a.t[i + 1] - a.t[i - 1]);
      }
      a.residual[i] = rate - expected(i);
    }
  }
  for (double r : a.residual) a.max_abs = std::max(a.max_abs, std::abs(r));
  return a;
}

EnergyAudit energy_audit(const TrajectoryRecord& traj, const Scenario& s, const ClosureRule& rule) {
  return energy_audit(traj, assemble_system(s, rule));
}

}  // namespace qmoment
