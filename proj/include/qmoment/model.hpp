#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qmoment {

/// V(x, t) = c2 x^2 + c4 x^4 + g x cos(Omega t), with m = 1.
///
/// Only these three monomials are representable; `from_monomials` rejects
/// anything else.
class PolynomialPotential {
 public:
  PolynomialPotential() = default;
  PolynomialPotential(double c2, double c4, double drive_g = 0.0,
                      double drive_omega = 1.0);

  /// Builds from a degree -> coefficient map. Degrees other than 2 and 4 throw
  /// ConstructionError unless their coefficient is exactly zero.
  static PolynomialPotential from_monomials(const std::map<int, double>& coefficients,
                                            double drive_g = 0.0,
                                            double drive_omega = 1.0);

  double c2() const noexcept { return c2_; }
  double c4() const noexcept { return c4_; }
  double drive_g() const noexcept { return drive_g_; }
  double drive_omega() const noexcept { return drive_omega_; }
  bool driven() const noexcept { return drive_g_ != 0.0; }

  double value(double x, double t) const noexcept;
  /// -dV/dx
  double force(double x, double t) const noexcept;

  bool operator==(const PolynomialPotential&) const = default;

 private:
  double c2_ = 0.0;
  double c4_ = 0.0;
  double drive_g_ = 0.0;
  double drive_omega_ = 1.0;
};

double evaluate_potential(const PolynomialPotential& pot, double x, double t);

/// Real minimal-uncertainty Gaussian exp(-(x-a)^2 / (2 Delta0^2)) with a
/// momentum boost. Position variance is Delta0^2 / 2.
class GaussianPacket {
 public:
  GaussianPacket(double center_a, double width_sq, double mean_p = 0.0, double hbar = 1.0);

  double center() const noexcept { return center_; }
  double width_sq() const noexcept { return width_sq_; }
  double mean_p() const noexcept { return mean_p_; }
  double hbar() const noexcept { return hbar_; }

  double variance() const noexcept { return 0.5 * width_sq_; }
  double momentum_variance() const noexcept;

  bool operator==(const GaussianPacket&) const = default;

 private:
  double center_;
  double width_sq_;
  double mean_p_;
  double hbar_;
};

struct PacketMoments {
  double mean_x;
  double mean_p;
  double var;
  double var_rate;
  double skew;
  double kurt;
};

PacketMoments packet_moments(const GaussianPacket& packet);

enum class ScenarioKind { Quartic, Volcano, DoubleWell, DrivenDoubleWell };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view text);

/// One of the four model problems. `kind` fixes the signs of (c2, c4):
///   Quartic (+w^2/2, +l/4), Volcano (+w^2/2, -l/4),
///   DoubleWell and DrivenDoubleWell (-w^2/2, +l/4).
/// The quartic keeps an optional harmonic part (omega defaults to 0), which is
/// also how the harmonic limit is reached (lambda = 0 is accepted only there).
class Scenario {
 public:
  Scenario(ScenarioKind kind, double omega, double lambda, double energy_e,
           double hbar = 1.0, double drive_g = 0.0, double drive_omega = 1.0);

  ScenarioKind kind() const noexcept { return kind_; }
  double omega() const noexcept { return omega_; }
  double lambda() const noexcept { return lambda_; }
  double hbar() const noexcept { return hbar_; }
  double energy() const noexcept { return energy_; }
  double drive_g() const noexcept { return drive_g_; }
  double drive_omega() const noexcept { return drive_omega_; }
  bool driven() const noexcept { return kind_ == ScenarioKind::DrivenDoubleWell; }

  Scenario with_energy(double e) const;
  PolynomialPotential potential() const;

  bool operator==(const Scenario&) const = default;

 private:
  ScenarioKind kind_;
  double omega_;
  double lambda_;
  double energy_;
  double hbar_;
  double drive_g_;
  double drive_omega_;
};

/// <p^2>/2 + c2 <x^2> + c4 <x^4> evaluated with Gaussian moment identities.
/// Throws UnsupportedError for the driven scenario.
double packet_energy(const GaussianPacket& packet, const Scenario& scenario);

struct EnergyResolution {
  double energy;
  std::vector<std::string> warnings;
};

/// Picks the scenario energy: a directly set value wins over the packet's
/// energy (a warning is recorded when both are present and disagree).
EnergyResolution resolve_energy(const Scenario& scenario, std::optional<double> direct,
                                const std::optional<GaussianPacket>& packet);

}  // namespace qmoment
