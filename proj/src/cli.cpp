#include "qmoment/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <omp.h>
#include <ostream>
#include <sstream>

#include "qmoment/analysis.hpp"
#include "qmoment/error.hpp"
#include "qmoment/hierarchy.hpp"

namespace qmoment::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const OutputFile* CommandResult::file(std::string_view name) const {
  for (const auto& f : files)
    if (f.name == name) return &f;
  return nullptr;
}

std::string CommandResult::summary_value(std::string_view key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  return "";
}

std::string CommandResult::render_summary(Format f) const {
  std::string out;
  if (summary.empty()) return out;
  if (f == Format::Csv) {
    out = "key,value\n";
    for (const auto& [k, v] : summary) out += k + "," + v + "\n";
  } else {
    std::size_t w = 0;
    for (const auto& kv : summary) w = std::max(w, kv.first.size());
    for (const auto& [k, v] : summary) out += fmt::format("{:<{}}  {}\n", k + ":", w + 1, v);
  }
  return out;
}

namespace {

std::string num(double v) { return format_number(v); }
std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }
// summaries use shortest round-trip numbers
std::string short_num(double v) { return fmt::format("{}", v); }
std::string opt_short(const std::optional<double>& v) { return v ? short_num(*v) : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

bool failed(RunStatus s) {
  return s == RunStatus::VarianceCollapse || s == RunStatus::Stiffness || s == RunStatus::NonFinite ||
         s == RunStatus::StepLimit;
}

void fail(CommandResult& r, int code, std::string message) {
  if (r.exit_code == kOk) {
    r.exit_code = code;
    r.message = std::move(message);
  }
}

json meta_of(const TrajectoryMeta& m) {
  return {{"method", std::string(ode::to_string(m.method))}, {"steps", m.steps}, {"rejected", m.rejected},
          {"wall_seconds", m.wall_seconds}};
}

json base_meta(std::string_view command, const RunConfig& c) {
  return {{"command", std::string(command)}, {"name", c.name}, {"threads", omp_get_max_threads()}};
}

double barrier_of(const RunConfig& c, const Scenario& s) {
  if (c.sweep.barrier) return *c.sweep.barrier;
  const double b = volcano_barrier(s);
  if (!std::isfinite(b)) throw ConfigError("'sweep.barrier' is required when lambda = 0");
  return b;
}

void add_frequency(CommandResult& r, const std::string& prefix, const std::vector<double>& t,
                   const std::vector<double>& x) {
  try {
    const auto f = measure_frequency(t, x);
    r.summary.emplace_back(prefix + "frequency", short_num(f.frequency));
    r.summary.emplace_back(prefix + "frequency_method", std::string(to_string(f.method)));
  } catch (const Error&) {
    r.summary.emplace_back(prefix + "frequency", "");
  }
}

std::string eigen_list(const std::vector<std::complex<double>>& ev) {
  std::string out;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const double re = ev[i].real() == 0.0 ? 0.0 : ev[i].real();  // drop the sign of zero
    const double im = ev[i].imag();
    out += (i ? ";" : "") + num(re) + (im < 0 ? "-" : "+") + num(std::abs(im)) + "i";
  }
  return out;
}

std::string frequency_list(const std::vector<double>& f) {
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) out += (i ? ";" : "") + num(f[i]);
  return out;
}

// ---- simulate

template <class Run, class Start>
std::vector<Run> run_bundle(const std::vector<Start>& starts, const std::function<Run(const Start&)>& f) {
  std::vector<Run> out(starts.size());
  std::exception_ptr err;
  const long n = static_cast<long>(starts.size());
#pragma omp parallel for schedule(dynamic, 1) if (n > 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = f(starts[i]);
    } catch (...) {
#pragma omp critical(qmoment_cli_bundle)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

CommandResult simulate_moments(const RunConfig& c) {
  CommandResult r;
  const ClosedSystem sys = resolve_system(c);
  const IntegrateOptions opts = resolve_integrate_options(c);
  std::vector<MomentState> starts;
  if (c.simulate.x0_values.empty()) {
    starts.push_back(resolve_initial_state(c, sys));
  } else {
    for (double x : c.simulate.x0_values) {
      RunConfig ci = c;
      ci.x0 = x;
      ci.packet.reset();
      if (!ci.v0 && c.packet) ci.v0 = c.packet->width_sq / 2;
      starts.push_back(resolve_initial_state(ci, sys));
    }
  }
  const auto trajs = starts.size() == 1 ? std::vector<TrajectoryRecord>{integrate(sys, starts[0], c.simulate.t_end, opts)}
                                        : integrate_many(sys, starts, c.simulate.t_end, opts);
  json meta = base_meta("simulate", c);
  meta["runs"] = json::array();
  r.summary.emplace_back("scenario", std::string(to_string(sys.scenario().kind())));
  r.summary.emplace_back("closure", std::string(to_string(sys.rule().mode)));
  r.summary.emplace_back("e", short_num(sys.scenario().energy()));
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& tr = trajs[i];
    const std::string prefix = trajs.size() == 1 ? "" : fmt::format("run{}.", i);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    r.files.push_back({trajs.size() == 1 ? "trajectory.csv" : fmt::format("trajectory_{}.csv", i), os.str()});
    r.summary.emplace_back(prefix + "status", std::string(to_string(tr.status)));
    if (trajs.size() > 1) r.summary.emplace_back(prefix + "x0", short_num(starts[i].mean_x));
    r.summary.emplace_back(prefix + "samples", std::to_string(tr.size()));
    r.summary.emplace_back(prefix + "t_final", tr.states.empty() ? "" : short_num(tr.states.back().t));
    if (!tr.states.empty()) {
      add_frequency(r, prefix, tr.times(), tr.channel(&MomentState::mean_x));
      const auto vs = variance_fluctuation(tr);
      r.summary.emplace_back(prefix + "var_mean", short_num(vs.mean));
      r.summary.emplace_back(prefix + "var_relative_fluctuation", short_num(vs.relative));
    }
    if (!tr.energy_residual.empty()) {
      double m = 0.0;
      for (double e : tr.energy_residual) m = std::max(m, std::abs(e));
      r.summary.emplace_back(prefix + "energy_residual_max", short_num(m));
    }
    if (opts.escape_barrier) {
      for (auto crit : {EscapeCriterion::MeanCrossesBarrier, EscapeCriterion::ProbabilityBelowHalf}) {
        const auto esc = escape_time(tr, *opts.escape_barrier, crit);
        r.summary.emplace_back(prefix + "escape_time." + std::string(to_string(crit)), opt_short(esc.escape_time));
      }
    }
    if (failed(tr.status)) fail(r, kNumericalFailure, fmt::format("run {}: {}", i, tr.message));
    meta["runs"].push_back(meta_of(tr.meta));
  }
  if (trajs.size() > 1) {
    const auto recs = divergence_time(trajs, c.sweep.epsilon);
    r.summary.emplace_back("divergence_epsilon", short_num(c.sweep.epsilon));
    r.summary.emplace_back("divergence_time", opt_short(earliest_divergence(recs)));
  }
  r.meta_json = meta.dump(2);
  return r;
}

CommandResult simulate_classical(const RunConfig& c) {
  CommandResult r;
  const Scenario s(c.kind, c.omega, c.lambda, c.energy.value_or(0.0), c.hbar, c.drive_g, c.drive_omega);
  const PolynomialPotential pot = s.potential();
  IntegrateOptions opts = resolve_integrate_options(c);
  std::vector<ClassicalState> starts;
  if (c.simulate.x0_values.empty()) starts.push_back({c.x0, c.p0, 0.0});
  for (double x : c.simulate.x0_values) starts.push_back({x, c.p0, 0.0});
  const auto runs = run_bundle<ClassicalTrajectory, ClassicalState>(
      starts, [&](const ClassicalState& st) { return integrate_classical(pot, st, c.simulate.t_end, opts); });
  json meta = base_meta("simulate", c);
  meta["runs"] = json::array();
  r.summary.emplace_back("scenario", std::string(to_string(s.kind())));
  r.summary.emplace_back("model", "classical");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& tr = runs[i];
    const std::string prefix = runs.size() == 1 ? "" : fmt::format("run{}.", i);
    std::ostringstream os;
    write_classical_csv(os, tr, pot);
    r.files.push_back({runs.size() == 1 ? "classical.csv" : fmt::format("classical_{}.csv", i), os.str()});
    r.summary.emplace_back(prefix + "status", std::string(to_string(tr.status)));
    r.summary.emplace_back(prefix + "x0", short_num(starts[i].x));
    if (!tr.states.empty()) {
      const auto& last = tr.states.back();
      r.summary.emplace_back(prefix + "t_final", short_num(last.t));
      r.summary.emplace_back(prefix + "x_final", short_num(last.x));
      r.summary.emplace_back(prefix + "well", last.x < 0 ? "left" : "right");
      if (!pot.driven()) {
        const double e0 = classical_energy(pot, tr.states.front());
        double d = 0.0;
        for (const auto& st : tr.states) d = std::max(d, std::abs(classical_energy(pot, st) - e0));
        r.summary.emplace_back(prefix + "energy_drift_max", short_num(d));
      }
    }
    if (failed(tr.status)) fail(r, kNumericalFailure, fmt::format("run {}: {}", i, tr.message));
    meta["runs"].push_back(meta_of(tr.meta));
  }
  if (runs.size() > 1) {
    std::optional<double> earliest;
    for (std::size_t i = 0; i < runs.size(); ++i)
      for (std::size_t j = i + 1; j < runs.size(); ++j) {
        std::vector<double> t, a, b;
        const std::size_t n = std::min(runs[i].states.size(), runs[j].states.size());
        for (std::size_t k = 0; k < n; ++k) {
          t.push_back(runs[i].states[k].t);
          a.push_back(runs[i].states[k].x);
          b.push_back(runs[j].states[k].x);
        }
        const auto d = divergence_time(t, a, b, c.sweep.epsilon);
        if (d && (!earliest || *d < *earliest)) earliest = d;
      }
    r.summary.emplace_back("divergence_epsilon", short_num(c.sweep.epsilon));
    r.summary.emplace_back("divergence_time", opt_short(earliest));
  }
  r.meta_json = meta.dump(2);
  return r;
}

// ---- fixed points

CommandResult fixed_points(const RunConfig& c, Format format) {
  CommandResult r;
  const ClosedSystem sys = resolve_system(c);
  std::vector<FixedPointReport> reports;
  try {
    reports = analytic_fixed_points(sys);
  } catch (const UnsupportedError&) {
    reports.push_back(newton_fixed_point(sys, resolve_initial_state(c, sys)));
  }
  std::ostringstream csv;
  csv << "branch,exists,x_mean,p_mean,var,var_rate,classification,eigenvalues,frequencies,condition\n";
  for (const auto& rep : reports) {
    csv << to_string(rep.branch) << ',' << (rep.exists ? "true" : "false") << ',';
    if (rep.exists) {
      csv << num(rep.location.mean_x) << ',' << num(rep.location.mean_p) << ',' << num(rep.location.var) << ','
          << num(rep.location.var_rate) << ',' << to_string(rep.classification()) << ','
          << eigen_list(rep.linear.eigenvalues) << ',' << frequency_list(rep.linear.linear_frequencies) << ',';
    } else {
      csv << ",,,,,,,";
    }
    csv << csv_field(rep.condition) << '\n';
  }
  if (format == Format::Text) {
    std::ostringstream os;
    os << fmt::format("{:<22} {:<6} {:>12} {:>12} {:<11} {}\n", "branch", "exists", "x_mean", "var",
                      "class", "frequencies");
    for (const auto& rep : reports) {
      if (rep.exists)
        os << fmt::format("{:<22} {:<6} {:>12.6g} {:>12.6g} {:<11} {}\n", to_string(rep.branch), "yes",
                          rep.location.mean_x, rep.location.var, to_string(rep.classification()),
                          frequency_list(rep.linear.linear_frequencies));
      else
        os << fmt::format("{:<22} {:<6} {:>12} {:>12} {:<11} {}\n", to_string(rep.branch), "no", "", "", "",
                          rep.condition);
    }
    r.files.push_back({"fixed_points.txt", os.str()});
  } else {
    r.files.push_back({"fixed_points.csv", csv.str()});
  }
  if (!sys.driven()) {
    std::ostringstream th;
    th << "name,energy,note\n";
    for (const auto& t : existence_thresholds(sys.scenario(), sys.rule()))
      th << t.name << ',' << num(t.energy) << ',' << csv_field(t.note) << '\n';
    r.files.push_back({"thresholds.csv", th.str()});
  }
  r.summary.emplace_back("scenario", std::string(to_string(sys.scenario().kind())));
  r.summary.emplace_back("e", short_num(sys.scenario().energy()));
  int existing = 0;
  for (const auto& rep : reports) {
    if (!rep.exists) continue;
    ++existing;
    const std::string k(to_string(rep.branch));
    r.summary.emplace_back(k + ".var", short_num(rep.location.var));
    r.summary.emplace_back(k + ".classification", std::string(to_string(rep.classification())));
  }
  r.summary.emplace_back("existing_branches", std::to_string(existing));
  r.meta_json = base_meta("fixed-points", c).dump(2);
  return r;
}

// ---- sweep

CommandResult sweep(const RunConfig& c) {
  CommandResult r;
  if (c.sweep.values.empty()) throw ConfigError("'sweep.values' is empty");
  json meta = base_meta("sweep", c);
  meta["runs"] = json::array();
  if (c.sweep.parameter == SweepParameter::Energy) {
    const Scenario base(c.kind, c.omega, c.lambda, c.sweep.values.front(), c.hbar, c.drive_g, c.drive_omega);
    const double b = barrier_of(c, base);
    IntegrateOptions opts = resolve_integrate_options(c);
    opts.escape_barrier = b;
    if (!c.simulate.runaway_bound) opts.runaway_bound = 10 * b;
    const auto trajs = run_bundle<TrajectoryRecord, double>(c.sweep.values, [&](const double& e) {
      const ClosedSystem sys = assemble_system(base.with_energy(e), c.closure);
      RunConfig ci = c;
      ci.energy = e;
      return integrate(sys, resolve_initial_state(ci, sys), c.sweep.t_end, opts);
    });
    std::ostringstream os;
    os << "e,escape_time,criterion\n";
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      for (auto crit : {EscapeCriterion::MeanCrossesBarrier, EscapeCriterion::ProbabilityBelowHalf}) {
        const auto esc = escape_time(trajs[i], b, crit);
        os << num(c.sweep.values[i]) << ',' << opt_num(esc.escape_time) << ',' << to_string(crit) << '\n';
        if (crit == EscapeCriterion::MeanCrossesBarrier)
          r.summary.emplace_back(fmt::format("escape_time[e={}]", c.sweep.values[i]), opt_short(esc.escape_time));
      }
      if (failed(trajs[i].status)) fail(r, kNumericalFailure, fmt::format("e = {}: {}", c.sweep.values[i], trajs[i].message));
      meta["runs"].push_back(meta_of(trajs[i].meta));
    }
    r.files.push_back({"escape.csv", os.str()});
    r.summary.insert(r.summary.begin(), {"barrier", short_num(b)});
  } else {
    if (c.sweep.x0_values.size() < 2) throw ConfigError("'sweep.x0_values' needs at least two entries");
    const ClosedSystem sys = resolve_system(c);
    const IntegrateOptions opts = resolve_integrate_options(c);
    std::vector<std::pair<double, double>> points;
    for (double v : c.sweep.values)
      for (double x : c.sweep.x0_values) points.emplace_back(v, x);
    const auto trajs = run_bundle<TrajectoryRecord, std::pair<double, double>>(points, [&](const auto& pt) {
      RunConfig ci = c;
      ci.packet.reset();
      ci.v0 = pt.first;
      ci.x0 = pt.second;
      return integrate(sys, resolve_initial_state(ci, sys), c.sweep.t_end, opts);
    });
    std::ostringstream os;
    os << "v0,divergence_time\n";
    const std::size_t m = c.sweep.x0_values.size();
    for (std::size_t i = 0; i < c.sweep.values.size(); ++i) {
      const std::vector<TrajectoryRecord> bundle(trajs.begin() + i * m, trajs.begin() + (i + 1) * m);
      for (const auto& t : bundle) {
        if (failed(t.status)) fail(r, kNumericalFailure, fmt::format("v0 = {}: {}", c.sweep.values[i], t.message));
        meta["runs"].push_back(meta_of(t.meta));
      }
      const auto d = earliest_divergence(divergence_time(bundle, c.sweep.epsilon));
      os << num(c.sweep.values[i]) << ',' << opt_num(d) << '\n';
      r.summary.emplace_back(fmt::format("divergence_time[v0={}]", c.sweep.values[i]), opt_short(d));
    }
    r.files.push_back({"divergence.csv", os.str()});
    r.summary.insert(r.summary.begin(), {"epsilon", short_num(c.sweep.epsilon)});
  }
  r.meta_json = meta.dump(2);
  return r;
}

// ---- oracle and compare

PolynomialPotential oracle_potential(const RunConfig& c) {
  return Scenario(c.kind, c.omega, c.lambda, c.energy.value_or(0.0), c.hbar, c.drive_g, c.drive_omega).potential();
}

void oracle_summary(CommandResult& r, const oracle::OracleRecord& rec, const std::string& prefix) {
  r.summary.emplace_back(prefix + "status", std::string(oracle::to_string(rec.status)));
  r.summary.emplace_back(prefix + "steps", std::to_string(rec.steps));
  double nd = 0.0, hd = 0.0;
  for (const auto& s : rec.samples) {
    nd = std::max(nd, std::abs(s.norm_err));
    hd = std::max(hd, std::abs(s.m.mean_h - rec.samples.front().m.mean_h));
  }
  r.summary.emplace_back(prefix + "norm_drift_max", short_num(nd));
  r.summary.emplace_back(prefix + "h_deviation_max", short_num(hd));
  if (!rec.samples.empty()) {
    add_frequency(r, prefix, rec.times(), rec.channel(&oracle::Moments::mean_x));
    r.summary.emplace_back(prefix + "var_relative_fluctuation",
                           num(series_fluctuation(rec.channel(&oracle::Moments::var)).relative));
    const auto est = oracle::estimate_closure(rec);
    r.summary.emplace_back(prefix + "beta_estimate", short_num(est.beta));
    r.summary.emplace_back(prefix + "beta1_estimate", est.skew_fit ? short_num(est.beta1) : "");
    r.summary.emplace_back(prefix + "beta2_estimate", est.skew_fit ? short_num(est.beta2) : "");
  }
  if (!rec.completed()) fail(r, kNumericalFailure, rec.message);
}

oracle::OracleRecord run_oracle(const RunConfig& c) {
  const auto psi0 = oracle::gaussian_state(c.oracle.grid, resolve_packet(c));
  return oracle::evolve(psi0, oracle_potential(c), c.oracle.t_end, c.oracle.control());
}

CommandResult oracle_command(const RunConfig& c) {
  CommandResult r;
  const auto rec = run_oracle(c);
  std::ostringstream os;
  oracle::write_oracle_csv(os, rec);
  r.files.push_back({"oracle.csv", os.str()});
  oracle_summary(r, rec, "");
  json meta = base_meta("oracle", c);
  meta["steps"] = rec.steps;
  meta["wall_seconds"] = rec.wall_seconds;
  r.meta_json = meta.dump(2);
  return r;
}

CommandResult compare(const RunConfig& c, bool assert_tolerances) {
  CommandResult r;
  const GaussianPacket packet = resolve_packet(c);
  RunConfig cc = c;
  cc.packet = PacketSpec{packet.center(), packet.width_sq(), packet.mean_p()};
  cc.x0 = packet.center();
  cc.p0 = packet.mean_p();
  cc.v0 = packet.variance();
  cc.w0 = 0.0;
  cc.simulate.t_end = c.oracle.t_end;
  cc.simulate.control.sample_interval = c.oracle.sample_interval;
  cc.simulate.x0_values.clear();
  const Scenario s0(c.kind, c.omega, c.lambda, 0.0, c.hbar, c.drive_g, c.drive_omega);
  std::vector<std::string> warnings;
  if (!s0.driven()) {
    // the closure has to run at the packet's own energy
    const auto res = resolve_energy(s0, std::nullopt, packet);
    if (c.energy && std::abs(*c.energy - res.energy) > 1e-12 * std::max(1.0, std::abs(res.energy)))
      r.summary.emplace_back("warning", fmt::format("e = {} replaced by the packet energy {}", *c.energy, res.energy));
    cc.energy = res.energy;
  }
  const ClosedSystem sys = resolve_system(cc);
  const auto traj = integrate(sys, resolve_initial_state(cc, sys), cc.simulate.t_end, resolve_integrate_options(cc));
  const auto rec = run_oracle(cc);

  std::ostringstream os;
  os << "t,x_closure,x_oracle,dx,var_closure,var_oracle,dv\n";
  const std::size_t n = std::min(traj.states.size(), rec.samples.size());
  double max_dx = 0, max_dv = 0, ss_dx = 0, ss_dv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = traj.states[i];
    const auto& b = rec.samples[i];
    if (std::abs(a.t - b.t) > 1e-9 * std::max(1.0, std::abs(a.t)))
      throw NumericalFailure(fmt::format("sample grids disagree at t = {} vs {}", a.t, b.t));
    const double dx = a.mean_x - b.m.mean_x, dv = a.var - b.m.var;
    max_dx = std::max(max_dx, std::abs(dx));
    max_dv = std::max(max_dv, std::abs(dv));
    ss_dx += dx * dx;
    ss_dv += dv * dv;
    os << num(a.t) << ',' << num(a.mean_x) << ',' << num(b.m.mean_x) << ',' << num(dx) << ',' << num(a.var) << ','
       << num(b.m.var) << ',' << num(dv) << '\n';
  }
  r.files.push_back({"compare.csv", os.str()});
  r.summary.emplace_back("e", short_num(sys.scenario().energy()));
  r.summary.emplace_back("samples", std::to_string(n));
  r.summary.emplace_back("max_abs_dx", short_num(max_dx));
  r.summary.emplace_back("rms_dx", short_num(n ? std::sqrt(ss_dx / n) : 0.0));
  r.summary.emplace_back("max_abs_dv", short_num(max_dv));
  r.summary.emplace_back("rms_dv", short_num(n ? std::sqrt(ss_dv / n) : 0.0));
  r.summary.emplace_back("closure.status", std::string(to_string(traj.status)));
  oracle_summary(r, rec, "oracle.");
  if (failed(traj.status)) fail(r, kNumericalFailure, traj.message);
  if (assert_tolerances) {
    if (c.compare.tol_x && max_dx > *c.compare.tol_x)
      fail(r, kToleranceExceeded, fmt::format("max |dx| = {} exceeds tol_x = {}", max_dx, *c.compare.tol_x));
    if (c.compare.tol_v && max_dv > *c.compare.tol_v)
      fail(r, kToleranceExceeded, fmt::format("max |dv| = {} exceeds tol_v = {}", max_dv, *c.compare.tol_v));
  }
  json meta = base_meta("compare", c);
  meta["closure"] = meta_of(traj.meta);
  meta["oracle"] = {{"steps", rec.steps}, {"wall_seconds", rec.wall_seconds}};
  r.meta_json = meta.dump(2);
  return r;
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw ConfigError(fmt::format("cannot write '{}'", tmp.string()));
    os << content;
    if (!os) throw ConfigError(fmt::format("write to '{}' failed", tmp.string()));
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string derive_text(const RunConfig& c) {
  const Scenario s(c.kind, c.omega, c.lambda, c.energy.value_or(0.0), c.hbar, c.drive_g, c.drive_omega);
  const ClosedSystem sys = assemble_system(s, c.closure);
  const SymbolicPotential pot = SymbolicPotential::from_scenario(s);
  const MomentHierarchy h(pot);
  std::ostringstream os;
  os << "# scenario: " << to_string(s.kind()) << "\n";
  os << "# closure: " << to_string(c.closure.mode) << "\n";
  os << "[raw]\n";
  for (MomentSymbol m : {MomentSymbol{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}})
    os << format_equation(moment_label(m), 1, h.raw_eom(m)) << "\n";
  if (s.driven()) os << format_equation("<H>", 1, h.operator_eom(pot.hamiltonian_symbol())) << "\n";
  os << "[central]\n";
  const sym::Poly mean_x(sym::mean_x_atom());
  const sym::Poly var = sym::Poly(sym::raw(2, 0)) - mean_x * mean_x;
  os << format_equation("<x>", 2, raw_to_central(h.time_derivative(mean_x, 2))) << "\n";
  os << format_equation("V", 2, raw_to_central(h.time_derivative(var, 2))) << "\n";
  os << "[closed]\n";
  os << sys.dump();
  return os.str();
}

CommandResult run_command(std::string_view command, const RunConfig& c, Format format, bool assert_tolerances) {
  if (command == "derive") {
    CommandResult r;
    r.files.push_back({"derive.txt", derive_text(c)});
    r.meta_json = base_meta(command, c).dump(2);
    return r;
  }
  if (command == "simulate")
    return c.simulate.model == SimulationModel::Classical ? simulate_classical(c) : simulate_moments(c);
  if (command == "fixed-points") return fixed_points(c, format);
  if (command == "sweep") return sweep(c);
  if (command == "oracle") return oracle_command(c);
  if (command == "compare") return compare(c, assert_tolerances);
  throw ConfigError(fmt::format("unknown command '{}'", command));
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moment-hierarchy dynamics for 1D polynomial potentials"};
  app.require_subcommand(1);
  std::string config_path, out_dir, format_name = "csv";
  bool assert_tolerances = false;
  const std::pair<std::string_view, const char*> described[] = {
      {"derive", "print the raw, central and closed equations"},
      {"simulate", "integrate the closed moment system (or the classical flow)"},
      {"fixed-points", "analytic fixed points, stability and existence thresholds"},
      {"sweep", "escape times over e, or divergence times over V(0)"},
      {"oracle", "split-operator Schrodinger reference run"},
      {"compare", "closure against the oracle on a shared time grid"},
  };
  static_assert(std::size(described) == std::size(kCommands));
  for (const auto& [name, description] : described) {
    auto* sub = app.add_subcommand(std::string(name), description);
    sub->add_option("--config", config_path, "run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--assert", assert_tolerances, "exit with code 3 when comparison tolerances are exceeded");
    sub->add_option("--format", format_name, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const Format format = format_name == "text" ? Format::Text : Format::Csv;
  try {
    const RunConfig config = load_config(config_path);
    const CommandResult r = run_command(command, config, format, assert_tolerances);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      for (const auto& f : r.files) write_atomically(fs::path(out_dir) / f.name, f.content);
      write_atomically(fs::path(out_dir) / (command + ".meta.json"), r.meta_json + "\n");
      out << r.render_summary(format);
    } else {
      for (const auto& f : r.files) {
        if (r.files.size() > 1) out << "# " << f.name << "\n";
        out << f.content;
      }
      err << r.render_summary(format);
    }
    if (r.exit_code != kOk) err << "qmoment " << command << ": " << r.message << "\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ConstructionError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kConfigError;
  } catch (const UnsupportedError& e) {
    err << "unsupported: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const fs::filesystem_error& e) {
    err << "output error: " << e.what() << "\n";
    return kConfigError;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"qmoment"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qmoment::cli
