#pragma once

// Closure rules for the central-moment hierarchy and the finite systems they
// produce: second-order equations for <x> and V, plus d<H>/dt when driven.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/hierarchy.hpp"
#include "qmoment/model.hpp"
#include "qmoment/symbolic.hpp"

namespace qmoment {

enum class ClosureMode { GaussianS0, BetaKurtosis, PhenomenologicalSkew };

std::string_view to_string(ClosureMode mode);
ClosureMode parse_closure_mode(std::string_view text);

/// K = 3 beta V^2, M5 = gamma V S, M7 = delta V^2 S, and S = 0 or
/// S = beta1 <x> + beta2 <x>^3 depending on the mode.
///
/// gamma and delta default to the leading Edgeworth values for a weakly
/// skewed near-Gaussian (10 and 105); no assembled system uses them.
struct ClosureRule {
  ClosureMode mode = ClosureMode::GaussianS0;
  double beta = 1.0;
  double gamma = 10.0;
  double delta = 105.0;
  double beta1 = 0.0;
  double beta2 = 0.0;

  static ClosureRule gaussian();
  static ClosureRule beta_kurtosis(double beta);
  static ClosureRule phenomenological_skew(double beta1, double beta2, double beta = 1.0);

  /// Throws ConstructionError if the fields break the mode's invariants.
  void validate() const;

  bool operator==(const ClosureRule&) const = default;
};

enum class ParameterBinding {
  Numeric,       // every closure parameter replaced by its exact value
  FreeSymbolic,  // the mode's free parameters stay as symbols
};

/// Substitutes the closure into an expression (raw moments are first expanded
/// about the means). Throws UnsupportedError for central moments of order > 7
/// or ones without a rule (M6, mixed x-p moments).
sym::Poly apply_closure(const sym::Poly& expr, const ClosureRule& rule,
                        ParameterBinding binding = ParameterBinding::Numeric);

enum class StateVar { MeanX, MeanP, Var, VarRate, MeanH };
std::string_view state_var_name(StateVar v);

/// Numeric binding slots for compiled expressions.
enum Slot : int {
  kSlotMeanX, kSlotMeanP, kSlotVar, kSlotVarRate, kSlotMeanH, kSlotCos, kSlotSin,
  kSlotHbar, kSlotOmega, kSlotLambda, kSlotDriveG, kSlotDriveOmega, kSlotEnergy,
  kSlotBeta, kSlotGamma, kSlotDelta, kSlotBeta1, kSlotBeta2, kSlotCount
};
int slot_of(const sym::Atom& a);

/// Immutable closed system for one scenario and closure rule.
///
/// Expressions are kept with the model parameters as symbols (and the mode's
/// free closure parameters as symbols); evaluation binds them numerically.
class ClosedSystem {
 public:
  const Scenario& scenario() const noexcept { return scenario_; }
  const ClosureRule& rule() const noexcept { return rule_; }
  const std::vector<StateVar>& layout() const noexcept { return layout_; }
  std::size_t dimension() const noexcept { return layout_.size(); }
  bool driven() const noexcept { return scenario_.driven(); }

  /// d^2<x>/dt^2, d^2V/dt^2 and d<H>/dt (zero when undriven).
  const sym::Poly& accel_mean() const noexcept { return accel_mean_; }
  const sym::Poly& accel_var() const noexcept { return accel_var_; }
  const sym::Poly& energy_rate() const noexcept { return energy_rate_; }
  /// Closed <V(x, t)> and <x V'(x, t)>.
  const sym::Poly& mean_potential() const noexcept { return mean_potential_; }
  const sym::Poly& mean_virial() const noexcept { return mean_virial_; }

  /// y follows layout(); writes dy/dt into dydt. Throws NumericalFailure
  /// naming the term when anything is non-finite.
  void evaluate(double t, const double* y, double* dydt) const;
  /// Same without the finiteness checks.
  void evaluate_unchecked(double t, const double* y, double* dydt) const noexcept;

  /// e = <p^2>/2 + <V>, with <p^2> recovered from the V equation:
  /// <p^2> = (dW/dt + 2<p>^2 + 2<x> d<p>/dt)/2 + <x V'>.
  double reconstruct_energy(double t, const double* y, double dw_dt) const;

  /// Exact partial derivative of the (<x>, V) accelerations with respect to a
  /// state variable, as compiled expressions in the same slots.
  const sym::Poly& accel_partial(int equation, StateVar wrt) const;

  /// Parameter slots (model constants and closure parameters).
  const std::array<double, kSlotCount>& parameters() const noexcept { return params_; }
  void fill_slots(double t, const double* y, double* slots) const noexcept;

  /// "d^2/dt^2 <x> = ..." lines in the derive text format.
  std::string dump() const;

 private:
  friend ClosedSystem assemble_system(const Scenario& s, const ClosureRule& rule);
  ClosedSystem(Scenario s, ClosureRule r);

  Scenario scenario_;
  ClosureRule rule_;
  std::vector<StateVar> layout_;
  sym::Poly accel_mean_, accel_var_, energy_rate_, mean_potential_, mean_virial_;
  std::array<std::array<sym::Poly, 5>, 2> partials_;
  sym::CompiledPoly c_accel_mean_, c_accel_var_, c_energy_rate_, c_potential_, c_virial_;
  std::array<double, kSlotCount> params_{};
};

/// Builds the closed system, eliminating <p^2> through e (undriven) or the
/// dynamical <H> (driven). Supported: {Quartic, Volcano, DoubleWell} with any
/// mode, DrivenDoubleWell with GaussianS0 only; anything else throws
/// UnsupportedError.
ClosedSystem assemble_system(const Scenario& s, const ClosureRule& rule);

}  // namespace qmoment
