#pragma once

// Run configuration: flat `key = value` lines, `#` comments, and bracketed
// sections named after the subcommand that reads them. Scenario, closure and
// initial-state keys sit before the first section.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/closure.hpp"
#include "qmoment/dynamics.hpp"
#include "qmoment/model.hpp"
#include "qmoment/observables.hpp"
#include "qmoment/oracle.hpp"

namespace qmoment {

enum class SimulationModel { Moments, Classical };
std::string_view to_string(SimulationModel m);

enum class SweepParameter { Energy, InitialVariance };
std::string_view to_string(SweepParameter p);

struct PacketSpec {
  double center = 0.0;
  double width_sq = 1.0;  // Delta0^2 = 2 V
  double mean_p = 0.0;

  bool operator==(const PacketSpec&) const = default;
};

struct SimulateConfig {
  SimulationModel model = SimulationModel::Moments;
  ode::Control control;
  double t_end = 50.0;
  std::optional<double> runaway_bound;
  std::optional<double> escape_barrier;
  std::optional<double> confinement_barrier;
  /// Runs one trajectory per listed <x>(0) instead of the single x0.
  std::vector<double> x0_values;

  bool operator==(const SimulateConfig&) const = default;
};

struct SweepConfig {
  SweepParameter parameter = SweepParameter::Energy;
  std::vector<double> values;
  double t_end = 100.0;
  std::optional<double> barrier;  // defaults to omega / sqrt(lambda)
  std::vector<double> x0_values;  // bundle for divergence sweeps
  double epsilon = 1.0;

  bool operator==(const SweepConfig&) const = default;
};

struct OracleConfig {
  oracle::Grid grid;
  double dt = 1e-3;
  double sample_interval = 0.01;
  double t_end = 10.0;
  double edge_tol = 1e-12;
  double norm_tol = 1e-8;

  oracle::OracleControl control() const;
  bool operator==(const OracleConfig&) const = default;
};

struct CompareConfig {
  std::optional<double> tol_x;  // max |<x> closure - <x> oracle|
  std::optional<double> tol_v;

  bool operator==(const CompareConfig&) const = default;
};

struct RunConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::Quartic;
  double omega = 0.0;
  double lambda = 1.0;
  double hbar = 1.0;
  std::optional<double> energy;
  double drive_g = 0.0;
  double drive_omega = 1.0;
  std::optional<PacketSpec> packet;
  ClosureRule closure;

  double x0 = 0.0;
  double p0 = 0.0;
  std::optional<double> v0;
  double w0 = 0.0;
  std::optional<double> h0;

  SimulateConfig simulate;
  SweepConfig sweep;
  OracleConfig oracle;
  CompareConfig compare;

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError with the offending key for unknown keys or sections,
/// malformed numbers and missing required entries.
RunConfig parse_config(std::istream& is);
RunConfig parse_config_text(std::string_view text);
RunConfig load_config(const std::string& path);

/// Every field, in a fixed order, with shortest round-trip numbers.
void emit_config(std::ostream& os, const RunConfig& c);
std::string emit_config_text(const RunConfig& c);

// Resolved views. All throw ConfigError or the domain error on bad input.

/// Energy from `e`, else from the packet.
Scenario resolve_scenario(const RunConfig& c);
ClosedSystem resolve_system(const RunConfig& c);
/// (x0, p0, v0, w0); v0 falls back to the packet variance. Driven systems
/// take h0, else the minimal-uncertainty Gaussian <H> at t = 0.
MomentState resolve_initial_state(const RunConfig& c, const ClosedSystem& sys);
IntegrateOptions resolve_integrate_options(const RunConfig& c);
/// Packet for the oracle: the configured packet, else a minimal-uncertainty
/// Gaussian with the initial mean, momentum and variance.
GaussianPacket resolve_packet(const RunConfig& c);

}  // namespace qmoment
