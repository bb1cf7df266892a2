#include "qmoment/model.hpp"

#include <cmath>
#include <fmt/format.h>

#include "qmoment/error.hpp"

namespace qmoment {

PolynomialPotential::PolynomialPotential(double c2, double c4, double drive_g,
                                         double drive_omega)
    : c2_(c2), c4_(c4), drive_g_(drive_g), drive_omega_(drive_omega) {
  if (!std::isfinite(c2) || !std::isfinite(c4) || !std::isfinite(drive_g) ||
      !std::isfinite(drive_omega))
    throw ConstructionError("potential coefficients must be finite");
  if (drive_g < 0.0) throw ConstructionError("drive amplitude g must be >= 0");
  if (drive_omega <= 0.0) throw ConstructionError("drive frequency must be > 0");
}

PolynomialPotential PolynomialPotential::from_monomials(
    const std::map<int, double>& coefficients, double drive_g, double drive_omega) {
  double c2 = 0.0;
  double c4 = 0.0;
  for (const auto& [degree, coefficient] : coefficients) {
    if (degree == 2) {
      c2 = coefficient;
    } else if (degree == 4) {
      c4 = coefficient;
    } else if (coefficient != 0.0) {
      throw ConstructionError(
          fmt::format("monomial x^{} is not representable (only x^2 and x^4)", degree));
    }
  }
  return PolynomialPotential(c2, c4, drive_g, drive_omega);
}

double PolynomialPotential::value(double x, double t) const noexcept {
  const double x2 = x * x;
  double v = c2_ * x2 + c4_ * x2 * x2;
  if (drive_g_ != 0.0) v += drive_g_ * x * std::cos(drive_omega_ * t);
  return v;
}

double PolynomialPotential::force(double x, double t) const noexcept {
  double f = -(2.0 * c2_ * x + 4.0 * c4_ * x * x * x);
  if (drive_g_ != 0.0) f -= drive_g_ * std::cos(drive_omega_ * t);
  return f;
}

double evaluate_potential(const PolynomialPotential& pot, double x, double t) {
  return pot.value(x, t);
}

GaussianPacket::GaussianPacket(double center_a, double width_sq, double mean_p, double hbar)
    : center_(center_a), width_sq_(width_sq), mean_p_(mean_p), hbar_(hbar) {
  if (!(width_sq > 0.0) || !std::isfinite(width_sq))
    throw ConstructionError("packet width Delta0^2 must be positive");
  if (!(hbar > 0.0)) throw ConstructionError("hbar must be positive");
  if (!std::isfinite(center_a) || !std::isfinite(mean_p))
    throw ConstructionError("packet center and momentum must be finite");
}

double GaussianPacket::momentum_variance() const noexcept {
  return hbar_ * hbar_ / (4.0 * variance());
}

PacketMoments packet_moments(const GaussianPacket& packet) {
  const double v = packet.variance();
  return {packet.center(), packet.mean_p(), v, 0.0, 0.0, 3.0 * v * v};
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Quartic: return "quartic";
    case ScenarioKind::Volcano: return "volcano";
    case ScenarioKind::DoubleWell: return "double-well";
    case ScenarioKind::DrivenDoubleWell: return "driven-double-well";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
  if (text == "quartic") return ScenarioKind::Quartic;
  if (text == "volcano") return ScenarioKind::Volcano;
  if (text == "double-well") return ScenarioKind::DoubleWell;
  if (text == "driven-double-well") return ScenarioKind::DrivenDoubleWell;
  throw ConfigError(fmt::format("unknown scenario '{}'", text));
}

Scenario::Scenario(ScenarioKind kind, double omega, double lambda, double energy_e,
                   double hbar, double drive_g, double drive_omega)
    : kind_(kind),
      omega_(omega),
      lambda_(lambda),
      energy_(energy_e),
      hbar_(hbar),
      drive_g_(drive_g),
      drive_omega_(drive_omega) {
  if (!std::isfinite(omega) || omega < 0.0) throw ConstructionError("omega must be >= 0");
  if (!std::isfinite(lambda) || lambda < 0.0) throw ConstructionError("lambda must be >= 0");
  if (lambda == 0.0 && kind != ScenarioKind::Quartic)
    throw ConstructionError("lambda = 0 is only accepted for the quartic (harmonic limit)");
  if (!std::isfinite(energy_e)) throw ConstructionError("energy must be finite");
  if (!(hbar > 0.0)) throw ConstructionError("hbar must be positive");
  if (kind == ScenarioKind::DrivenDoubleWell) {
    if (drive_g < 0.0) throw ConstructionError("drive amplitude g must be >= 0");
    if (!(drive_omega > 0.0)) throw ConstructionError("drive frequency must be > 0");
  } else if (drive_g != 0.0) {
    throw ConstructionError("only the driven double well carries a drive");
  }
}

Scenario Scenario::with_energy(double e) const {
  return Scenario(kind_, omega_, lambda_, e, hbar_, drive_g_, drive_omega_);
}

PolynomialPotential Scenario::potential() const {
  const double half_w2 = 0.5 * omega_ * omega_;
  const double quarter_l = 0.25 * lambda_;
  switch (kind_) {
    case ScenarioKind::Quartic: return {half_w2, quarter_l};
    case ScenarioKind::Volcano: return {half_w2, -quarter_l};
    case ScenarioKind::DoubleWell: return {-half_w2, quarter_l};
    case ScenarioKind::DrivenDoubleWell:
      return {-half_w2, quarter_l, drive_g_, drive_omega_};
  }
  return {};
}

double packet_energy(const GaussianPacket& packet, const Scenario& scenario) {
  if (scenario.driven())
    throw UnsupportedError("packet energy is not conserved under a drive; track <H> instead");
  const PolynomialPotential pot = scenario.potential();
  const double a = packet.center();
  const double v = packet.variance();
  const double x2 = a * a + v;
  const double x4 = a * a * a * a + 6.0 * a * a * v + 3.0 * v * v;
  const double p2 = packet.mean_p() * packet.mean_p() + packet.momentum_variance();
  return 0.5 * p2 + pot.c2() * x2 + pot.c4() * x4;
}

EnergyResolution resolve_energy(const Scenario& scenario, std::optional<double> direct,
                                const std::optional<GaussianPacket>& packet) {
  EnergyResolution out{scenario.energy(), {}};
  std::optional<double> from_packet;
  if (packet && !scenario.driven()) from_packet = packet_energy(*packet, scenario);
  if (direct) {
    out.energy = *direct;
    if (from_packet && std::abs(*from_packet - *direct) > 1e-12 * (1.0 + std::abs(*direct)))
      out.warnings.push_back(fmt::format(
          "energy set directly to {:.10g}; packet energy {:.10g} ignored", *direct,
          *from_packet));
  } else if (from_packet) {
    out.energy = *from_packet;
  }
  return out;
}

}  // namespace qmoment
