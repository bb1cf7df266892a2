#pragma once

// Heisenberg equations of motion for Weyl-ordered moments <x^a p^b> under
// H = p^2/2 + V(x, t), computed exactly in operator algebra with [x, p] = i hbar.

#include <memory>
#include <mutex>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/model.hpp"
#include "qmoment/symbolic.hpp"

namespace qmoment {

/// Weyl-ordered moment <x^a p^b>; (0, 0) is the constant 1.
struct MomentSymbol {
  int x_order = 0;
  int p_order = 0;

  auto operator<=>(const MomentSymbol&) const = default;
  int order() const noexcept { return x_order + p_order; }
};

/// V(x, t) = c2 x^2 + c4 x^4 + drive x cos(Omega t) with exact coefficients,
/// either in terms of the model symbols (omega, lambda, g) or as exact
/// rationals taken from a numeric potential.
struct SymbolicPotential {
  sym::Poly c2;
  sym::Poly c4;
  sym::Poly drive;
  sym::Poly drive_freq;  // Omega, used only for d/dt cos(Omega t)

  static SymbolicPotential from_scenario(const Scenario& scenario);
  static SymbolicPotential from_numeric(const PolynomialPotential& pot);

  /// Phase-space symbol p^2/2 + V(x, t) (atoms OpX, OpP, CosDrive).
  sym::Poly hamiltonian_symbol() const;
  sym::Poly potential_symbol() const;
  /// <V(x, t)> and <x V'(x, t)> as linear forms in raw moments.
  sym::Poly mean_potential() const;
  sym::Poly mean_virial() const;
  /// Highest x power present in V.
  int degree() const;
  bool is_pure_quartic() const;
};

namespace weyl {

/// Weyl symbol -> x-left standard-ordered symbol and back.
sym::Poly to_standard(const sym::Poly& weyl_symbol);
sym::Poly from_standard(const sym::Poly& standard_symbol);
/// Operator product of two standard-ordered symbols.
sym::Poly standard_product(const sym::Poly& lhs, const sym::Poly& rhs);
/// Weyl symbol of [A, B] / (i hbar) for Weyl symbols A, B.
sym::Poly commutator_over_ihbar(const sym::Poly& a, const sym::Poly& b);
/// Maps x^a p^b (times coefficients) to the moment atoms <x^a p^b>.
sym::Poly expectation(const sym::Poly& weyl_symbol);
sym::Poly monomial_symbol(MomentSymbol s);

}  // namespace weyl

/// Caches the raw-moment EOMs of one potential; safe to share across threads.
class MomentHierarchy {
 public:
  explicit MomentHierarchy(SymbolicPotential pot);

  const SymbolicPotential& potential() const noexcept { return pot_; }

  /// d<sym>/dt as a polynomial in raw moments and parameters.
  sym::Poly raw_eom(MomentSymbol s) const;
  /// d/dt of the expectation of a Weyl-symbol operator, explicit t included.
  sym::Poly operator_eom(const sym::Poly& weyl_symbol) const;
  /// Total time derivative of an expression in raw moments, <H>, and the
  /// drive phase; the chain rule substitutes every raw-moment EOM.
  sym::Poly time_derivative(const sym::Poly& expr) const;
  sym::Poly time_derivative(const sym::Poly& expr, int order) const;

 private:
  SymbolicPotential pot_;
  mutable std::mutex mutex_;
  mutable std::map<MomentSymbol, sym::Poly> cache_;
};

sym::Poly derive_raw_eom(const SymbolicPotential& pot, MomentSymbol s);
sym::Poly second_time_derivative(const SymbolicPotential& pot, MomentSymbol s);

/// Binomial expansion about <x>, <p>; the (1,1) central moment is written as
/// W/2 since dV/dt = 2 Cov(x, p). Idempotent on central expressions.
sym::Poly raw_to_central(const sym::Poly& expr);
/// Inverse of raw_to_central.
sym::Poly central_to_raw(const sym::Poly& expr);

/// True when no imaginary unit survives and every hbar power is even.
bool is_real_hbar_even(const sym::Poly& expr);
/// Highest total order of any raw-moment atom.
int max_moment_order(const sym::Poly& expr);

struct X3Verification {
  bool equal = false;
  sym::Poly lhs;         // d^4<x^3>/dt^4, fully reduced
  sym::Poly rhs;         // -63/10 lambda d^2<x^5>/dt^2 + 9 lambda hbar^2 <x> - 9/2 lambda^2 <x^7>
  sym::Poly difference;  // lhs - rhs
  sym::Poly hbar_terms;  // terms of lhs carrying hbar
  std::vector<std::string> trail;

  std::string report() const;
};

/// Reduces both sides of the fourth-order <x^3> identity of the pure quartic
/// to raw-moment normal form and compares them term by term.
X3Verification verify_x3_fourth_derivative(const SymbolicPotential& pot);

std::string moment_label(MomentSymbol s);
/// "d/dt <x^a p^b> = ..." style line; `order` > 1 renders d^n/dt^n.
std::string format_equation(std::string_view subject, int order, const sym::Poly& rhs);

}  // namespace qmoment
