#include "qmoment/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "qmoment/error.hpp"

namespace qmoment {

namespace pt = boost::property_tree;

std::string_view to_string(SimulationModel m) {
  return m == SimulationModel::Moments ? "moments" : "classical";
}

std::string_view to_string(SweepParameter p) {
  return p == SweepParameter::Energy ? "e" : "v0";
}

oracle::OracleControl OracleConfig::control() const {
  oracle::OracleControl c;
  c.dt = dt;
  c.sample_interval = sample_interval;
  c.edge_tol = edge_tol;
  c.norm_tol = norm_tol;
  return c;
}

namespace {

std::string number(double v) { return fmt::format("{}", v); }

std::string number_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + number(v[i]);
  return out;
}

// Reads one section and remembers which keys were consumed.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  std::optional<double> real(const std::string& key) {
    const auto s = text(key);
    if (!s) return std::nullopt;
    return parse_real(key, *s);
  }

  void real(const std::string& key, double& out) {
    if (auto v = real(key)) out = *v;
  }

  std::vector<double> list(const std::string& key) {
    std::vector<double> out;
    const auto s = text(key);
    if (!s) return out;
    std::stringstream ss(*s);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_real(key, trim(item)));
    return out;
  }

  void finish() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty()) throw ConfigError(fmt::format("unexpected nesting under '{}'", locate(key)));
      if (!used_.count(key)) throw ConfigError(fmt::format("unknown key '{}'", locate(key)));
    }
  }

  std::string locate(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t") - a + 1);
  }

  double parse_real(const std::string& key, const std::string& s) const {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end)
      throw ConfigError(fmt::format("'{}' is not a number: '{}'", locate(key), s));
    return v;
  }

  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

template <class F>
auto with_key(const Section& s, const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("'{}': {}", s.locate(key), e.what()));
  }
}

const std::set<std::string> kSections = {"simulate", "sweep", "oracle", "compare", "fixed-points", "derive"};

}  // namespace

RunConfig parse_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  RunConfig c;
  pt::ptree root;
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      root.push_back({key, child});
    } else if (!kSections.count(key)) {
      throw ConfigError(fmt::format("unknown section [{}]", key));
    }
  }
  auto child = [&](const char* name) -> const pt::ptree* {
    const auto it = tree.find(name);
    return it == tree.not_found() ? nullptr : &it->second;
  };

  Section top(&root, "");
  c.name = top.text("name").value_or("");
  if (auto k = top.text("scenario"))
    c.kind = with_key(top, "scenario", [&] { return parse_scenario_kind(*k); });
  else
    throw ConfigError("missing required key 'scenario'");
  top.real("omega", c.omega);
  top.real("lambda", c.lambda);
  top.real("hbar", c.hbar);
  c.energy = top.real("e");
  top.real("drive_g", c.drive_g);
  top.real("drive_omega", c.drive_omega);
  {
    const auto a = top.real("packet_center"), w = top.real("packet_width_sq"), p = top.real("packet_p");
    if (a || w || p) {
      if (!a || !w) throw ConfigError("a packet needs packet_center and packet_width_sq");
      c.packet = PacketSpec{*a, *w, p.value_or(0.0)};
    }
  }
  if (auto m = top.text("closure")) c.closure.mode = with_key(top, "closure", [&] { return parse_closure_mode(*m); });
  top.real("beta", c.closure.beta);
  top.real("beta1", c.closure.beta1);
  top.real("beta2", c.closure.beta2);
  top.real("gamma", c.closure.gamma);
  top.real("delta", c.closure.delta);
  top.real("x0", c.x0);
  top.real("p0", c.p0);
  c.v0 = top.real("v0");
  top.real("w0", c.w0);
  c.h0 = top.real("h0");
  top.finish();

  Section sim(child("simulate"), "simulate");
  if (auto m = sim.text("model")) {
    if (*m == "moments") c.simulate.model = SimulationModel::Moments;
    else if (*m == "classical") c.simulate.model = SimulationModel::Classical;
    else throw ConfigError(fmt::format("'simulate.model' must be moments or classical, got '{}'", *m));
  }
  if (auto m = sim.text("method")) c.simulate.control.method = with_key(sim, "method", [&] { return ode::parse_method(*m); });
  sim.real("dt", c.simulate.control.dt);
  sim.real("rtol", c.simulate.control.rtol);
  sim.real("atol", c.simulate.control.atol);
  sim.real("sample_interval", c.simulate.control.sample_interval);
  sim.real("max_step", c.simulate.control.max_step);
  sim.real("t_end", c.simulate.t_end);
  c.simulate.runaway_bound = sim.real("runaway_bound");
  c.simulate.escape_barrier = sim.real("escape_barrier");
  c.simulate.confinement_barrier = sim.real("confinement_barrier");
  c.simulate.x0_values = sim.list("x0_values");
  sim.finish();

  Section sw(child("sweep"), "sweep");
  if (auto p = sw.text("parameter")) {
    if (*p == "e") c.sweep.parameter = SweepParameter::Energy;
    else if (*p == "v0") c.sweep.parameter = SweepParameter::InitialVariance;
    else throw ConfigError(fmt::format("'sweep.parameter' must be e or v0, got '{}'", *p));
  }
  c.sweep.values = sw.list("values");
  sw.real("t_end", c.sweep.t_end);
  c.sweep.barrier = sw.real("barrier");
  c.sweep.x0_values = sw.list("x0_values");
  sw.real("epsilon", c.sweep.epsilon);
  sw.finish();

  Section orc(child("oracle"), "oracle");
  orc.real("x_min", c.oracle.grid.x_min);
  orc.real("x_max", c.oracle.grid.x_max);
  if (auto n = orc.real("n")) {
    if (!(*n >= 1) || *n != std::floor(*n) || *n > 1e9) throw ConfigError("'oracle.n' must be a positive integer");
    c.oracle.grid.n = static_cast<std::size_t>(*n);
  }
  orc.real("dt", c.oracle.dt);
  orc.real("sample_interval", c.oracle.sample_interval);
  orc.real("t_end", c.oracle.t_end);
  orc.real("edge_tol", c.oracle.edge_tol);
  orc.real("norm_tol", c.oracle.norm_tol);
  orc.finish();

  Section cmp(child("compare"), "compare");
  c.compare.tol_x = cmp.real("tol_x");
  c.compare.tol_v = cmp.real("tol_v");
  cmp.finish();

  Section(child("fixed-points"), "fixed-points").finish();
  Section(child("derive"), "derive").finish();

  with_key(top, "closure", [&] {
    c.closure.validate();
    return 0;
  });
  return c;
}

RunConfig parse_config_text(std::string_view text) {
  std::istringstream is{std::string(text)};
  return parse_config(is);
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(fmt::format("cannot open config '{}'", path));
  return parse_config(is);
}

void emit_config(std::ostream& os, const RunConfig& c) {
  pt::ptree tree;
  auto put = [](pt::ptree& t, const std::string& key, const std::string& value) { t.push_back({key, pt::ptree(value)}); };
  auto put_opt = [&](pt::ptree& t, const std::string& key, const std::optional<double>& v) {
    if (v) put(t, key, number(*v));
  };
  if (!c.name.empty()) put(tree, "name", c.name);
  put(tree, "scenario", std::string(to_string(c.kind)));
  put(tree, "omega", number(c.omega));
  put(tree, "lambda", number(c.lambda));
  put(tree, "hbar", number(c.hbar));
  put_opt(tree, "e", c.energy);
  put(tree, "drive_g", number(c.drive_g));
  put(tree, "drive_omega", number(c.drive_omega));
  if (c.packet) {
    put(tree, "packet_center", number(c.packet->center));
    put(tree, "packet_width_sq", number(c.packet->width_sq));
    put(tree, "packet_p", number(c.packet->mean_p));
  }
  put(tree, "closure", std::string(to_string(c.closure.mode)));
  put(tree, "beta", number(c.closure.beta));
  put(tree, "beta1", number(c.closure.beta1));
  put(tree, "beta2", number(c.closure.beta2));
  put(tree, "gamma", number(c.closure.gamma));
  put(tree, "delta", number(c.closure.delta));
  put(tree, "x0", number(c.x0));
  put(tree, "p0", number(c.p0));
  put_opt(tree, "v0", c.v0);
  put(tree, "w0", number(c.w0));
  put_opt(tree, "h0", c.h0);

  pt::ptree sim;
  put(sim, "model", std::string(to_string(c.simulate.model)));
  put(sim, "method", std::string(ode::to_string(c.simulate.control.method)));
  put(sim, "dt", number(c.simulate.control.dt));
  put(sim, "rtol", number(c.simulate.control.rtol));
  put(sim, "atol", number(c.simulate.control.atol));
  put(sim, "sample_interval", number(c.simulate.control.sample_interval));
  put(sim, "max_step", number(c.simulate.control.max_step));
  put(sim, "t_end", number(c.simulate.t_end));
  put_opt(sim, "runaway_bound", c.simulate.runaway_bound);
  put_opt(sim, "escape_barrier", c.simulate.escape_barrier);
  put_opt(sim, "confinement_barrier", c.simulate.confinement_barrier);
  if (!c.simulate.x0_values.empty()) put(sim, "x0_values", number_list(c.simulate.x0_values));
  tree.push_back({"simulate", sim});

  pt::ptree sw;
  put(sw, "parameter", std::string(to_string(c.sweep.parameter)));
  if (!c.sweep.values.empty()) put(sw, "values", number_list(c.sweep.values));
  put(sw, "t_end", number(c.sweep.t_end));
  put_opt(sw, "barrier", c.sweep.barrier);
  if (!c.sweep.x0_values.empty()) put(sw, "x0_values", number_list(c.sweep.x0_values));
  put(sw, "epsilon", number(c.sweep.epsilon));
  tree.push_back({"sweep", sw});

  pt::ptree orc;
  put(orc, "x_min", number(c.oracle.grid.x_min));
  put(orc, "x_max", number(c.oracle.grid.x_max));
  put(orc, "n", std::to_string(c.oracle.grid.n));
  put(orc, "dt", number(c.oracle.dt));
  put(orc, "sample_interval", number(c.oracle.sample_interval));
  put(orc, "t_end", number(c.oracle.t_end));
  put(orc, "edge_tol", number(c.oracle.edge_tol));
  put(orc, "norm_tol", number(c.oracle.norm_tol));
  tree.push_back({"oracle", orc});

  pt::ptree cmp;
  put_opt(cmp, "tol_x", c.compare.tol_x);
  put_opt(cmp, "tol_v", c.compare.tol_v);
  if (!cmp.empty()) tree.push_back({"compare", cmp});

  pt::write_ini(os, tree);
}

std::string emit_config_text(const RunConfig& c) {
  std::ostringstream os;
  emit_config(os, c);
  return os.str();
}

Scenario resolve_scenario(const RunConfig& c) {
  const Scenario base(c.kind, c.omega, c.lambda, c.energy.value_or(0.0), c.hbar, c.drive_g, c.drive_omega);
  if (c.energy || base.driven()) return base;
  if (!c.packet) throw ConfigError("set 'e' or a packet (packet_center, packet_width_sq)");
  const GaussianPacket packet(c.packet->center, c.packet->width_sq, c.packet->mean_p, c.hbar);
  return base.with_energy(resolve_energy(base, std::nullopt, packet).energy);
}

ClosedSystem resolve_system(const RunConfig& c) { return assemble_system(resolve_scenario(c), c.closure); }

MomentState resolve_initial_state(const RunConfig& c, const ClosedSystem& sys) {
  MomentState st;
  st.mean_x = c.x0;
  st.mean_p = c.p0;
  st.var_rate = c.w0;
  if (c.v0) {
    st.var = *c.v0;
  } else if (c.packet && !c.v0) {
    const GaussianPacket packet(c.packet->center, c.packet->width_sq, c.packet->mean_p, c.hbar);
    st.mean_x = packet.center();
    st.mean_p = packet.mean_p();
    st.var = packet.variance();
    st.var_rate = 0.0;
  } else {
    throw ConfigError("set 'v0' or a packet for the initial variance");
  }
  if (!(st.var > 0.0)) throw ConfigError("'v0' must be positive");
  if (sys.driven()) {
    if (c.h0) {
      st.mean_h = *c.h0;
    } else {
      // <p^2> of a pure Gaussian with covariance W / 2, and <V> from Gaussian moments
      const double h = c.hbar, v = st.var, m = st.mean_x;
      const double p2 = st.mean_p * st.mean_p + (h * h / 4 + st.var_rate * st.var_rate / 4) / v;
      const auto pot = sys.scenario().potential();
      const double x2 = m * m + v, x4 = m * m * m * m + 6 * m * m * v + 3 * v * v;
      st.mean_h = p2 / 2 + pot.c2() * x2 + pot.c4() * x4 + pot.drive_g() * m;
    }
  }
  return st;
}

IntegrateOptions resolve_integrate_options(const RunConfig& c) {
  IntegrateOptions o;
  o.control = c.simulate.control;
  if (c.simulate.runaway_bound) o.runaway_bound = *c.simulate.runaway_bound;
  o.escape_barrier = c.simulate.escape_barrier;
  o.confinement_barrier = c.simulate.confinement_barrier;
  return o;
}

GaussianPacket resolve_packet(const RunConfig& c) {
  if (c.packet) return GaussianPacket(c.packet->center, c.packet->width_sq, c.packet->mean_p, c.hbar);
  if (!c.v0) throw ConfigError("the oracle needs a packet or 'v0'");
  if (c.w0 != 0.0) throw ConfigError("the oracle packet is minimal-uncertainty; set w0 = 0");
  return GaussianPacket(c.x0, 2 * *c.v0, c.p0, c.hbar);
}

}  // namespace qmoment
