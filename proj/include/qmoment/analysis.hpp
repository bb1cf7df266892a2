#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/closure.hpp"
#include "qmoment/dynamics.hpp"
#include "qmoment/error.hpp"

namespace qmoment {

enum class FixedPointBranch {
  QuarticCenter,
  VolcanoMinus,
  VolcanoPlus,
  DoubleWellA_plus,
  DoubleWellA_minus,
  DoubleWellB_minus,
  DoubleWellB_plus,
  NumericNewton,
};
std::string_view to_string(FixedPointBranch b);

enum class Stability { Centre, Saddle, Mixed, Degenerate };
std::string_view to_string(Stability s);

using Matrix4 = std::array<std::array<double, 4>, 4>;

struct Linearization {
  Matrix4 jacobian{};  // rows/cols follow (<x>, <p>, V, W)
  std::vector<std::complex<double>> eigenvalues;
  Stability classification = Stability::Degenerate;
  /// Positive imaginary parts of the purely imaginary eigenvalues, ascending.
  std::vector<double> linear_frequencies;
  /// Trace and determinant of the 2x2 block d^2(<x>, V)/dt^2 = M (d<x>, dV).
  double block_trace = 0.0;
  double block_det = 0.0;
  /// True when the eigenvalues came from mu = eigenvalue^2 roots of the block.
  bool from_block = false;
};

struct FixedPointReport {
  MomentState location;
  FixedPointBranch branch = FixedPointBranch::NumericNewton;
  bool exists = false;
  std::string condition;
  Linearization linear;  // only filled when exists
  int iterations = 0;    // Newton iterations, 0 for analytic branches

  // Trace and determinant conditions of the displaced double-well branch,
  // 5w^2 - 12 l V > 0 and (w^2 - 3 l V)(2 w^2 - 9 l V) > 0 (GaussianS0 only).
  std::optional<bool> trace_condition;
  std::optional<bool> det_condition;

  Stability classification() const noexcept { return linear.classification; }
};

/// Newton ran out of iterations; carries the last iterate.
class NewtonFailure : public NumericalFailure {
 public:
  NewtonFailure(const std::string& what, MomentState last, double residual)
      : NumericalFailure(what), last_(last), residual_(residual) {}
  const MomentState& last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return residual_; }

 private:
  MomentState last_;
  double residual_;
};

constexpr double kNewtonTol = 1e-12;
constexpr double kClassifyTol = 1e-10;

/// Every analytic branch for the scenario, existing or not, linearized where
/// it exists. Driven systems throw UnsupportedError.
std::vector<FixedPointReport> analytic_fixed_points(const ClosedSystem& sys);

/// Damped Newton with a forward-difference Jacobian.
FixedPointReport newton_fixed_point(const ClosedSystem& sys, const MomentState& guess,
                                    int max_iterations = 100);

/// Analytic Jacobian and eigen-structure at a state of an undriven system.
Linearization linearize(const ClosedSystem& sys, const MomentState& at);
Linearization linearize(const ClosedSystem& sys, const FixedPointReport& at);

/// Same Jacobian, eigenvalues from a general 4x4 eigensolver.
std::vector<std::complex<double>> general_eigenvalues(const Matrix4& jacobian);

Stability classify(const std::vector<std::complex<double>>& eigenvalues, double tol = kClassifyTol);

/// max_i |f_i| of the first-order rhs.
double rhs_residual(const ClosedSystem& sys, const MomentState& st);

struct EnergyThreshold {
  std::string name;  // volcano_exist, dw_A_exist, dw_A_stable, dw_B_exist, quartic_exist
  double energy;     // critical e
  std::string note;
};

std::vector<EnergyThreshold> existence_thresholds(const Scenario& s, const ClosureRule& rule);

struct ClassicalPeriod {
  double energy = 0.0;
  double amplitude = 0.0;  // turning point a
  double period = 0.0;     // quadrature
  double omega_sq = 0.0;   // (2 pi / period)^2
  /// (2 pi / w)(1 - 3 lambda E / 4 w^4); NaN when w = 0.
  double small_lambda_period = 0.0;
  double small_lambda_omega_sq = 0.0;
  /// Pure quartic form Gamma(1/2) Gamma(1/4) / (Gamma(3/4) (lambda E)^(1/4)); NaN when lambda = 0.
  double quartic_period = 0.0;
  double quartic_omega_sq = 0.0;
  double interpolated_omega_sq = 0.0;
};

/// Classical period in V = c2 x^2 + c4 x^4 with c2, c4 >= 0 (w^2 = 2 c2, lambda = 4 c4).
/// Throws ConstructionError for E at or below the minimum.
ClassicalPeriod classical_period(const PolynomialPotential& pot, double energy);
/// w^2 sqrt(1 + 2 lambda E / w^4), the pure quartic limit sqrt(2 lambda E) when w = 0.
double omega_interpolated(double omega, double lambda, double energy);

struct ShapeInvariantPacket {
  double vbar = 0.0;      // scaled variance, vbar^3 = 1/12
  double variance = 0.0;  // (hbar^2 / 12 lambda)^(1/3)
  double width_sq = 0.0;  // Delta0^2 = 2 V
  double energy = 0.0;    // 9/4 lambda V^2
  double residual = 0.0;  // 9/4 vbar^2 - 1/(8 vbar) - 3/4 vbar^2
  std::string note;
};

/// Pure quartic only (omega = 0).
ShapeInvariantPacket shape_invariant_variance(const Scenario& s);

enum class FrequencyMethod { ZeroCrossings, FourierPeak };
std::string_view to_string(FrequencyMethod m);

struct FrequencyEstimate {
  double frequency = 0.0;  // angular
  FrequencyMethod method = FrequencyMethod::ZeroCrossings;
  int crossings = 0;
};

/// Angular frequency of x(t) - mean(x): zero-crossing intervals (Hermite
/// refined when v = dx/dt is given), DFT peak when fewer than three crossings
/// or the half-periods scatter by more than 20%.
FrequencyEstimate measure_frequency(const std::vector<double>& t, const std::vector<double>& x,
                                    const std::vector<double>& v = {});
FrequencyEstimate measure_frequency(const TrajectoryRecord& traj);
/// Peak of |sum x_k exp(-i w t_k)| over w, refined by golden-section search.
double fourier_peak_frequency(const std::vector<double>& t, const std::vector<double>& x);

}  // namespace qmoment
