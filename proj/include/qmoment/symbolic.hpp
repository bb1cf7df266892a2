#pragma once

// Exact commutative polynomials over a small fixed alphabet of atoms.
//
// The same type carries phase-space symbols (x, p), moment symbols, and the
// model parameters. The imaginary unit is an atom reduced with i^2 = -1, which
// keeps every coefficient a plain rational.

#include <boost/multiprecision/cpp_int.hpp>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace qmoment::sym {

using Rational = boost::multiprecision::cpp_rational;

enum class AtomKind : std::uint8_t {
  Energy,     // e
  MeanH,      // <H>, dynamical when driven
  Hbar,
  Freq,       // omega
  Lambda,
  DriveG,     // g
  DriveFreq,  // Omega
  Beta,
  Beta1,
  Beta2,
  Gamma,
  Delta,
  CosDrive,   // cos(Omega t)
  SinDrive,   // sin(Omega t)
  Imag,       // i
  OpX,        // phase-space x
  OpP,        // phase-space p
  Central,    // <(x-<x>)^a (p-<p>)^b>, Weyl ordered
  VarRate,    // W = dV/dt
  Raw,        // <x^a p^b>, Weyl ordered; (1,0) and (0,1) are the means
};

struct Atom {
  AtomKind kind{};
  int a = 0;
  int b = 0;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

inline constexpr Atom atom(AtomKind k) { return Atom{k, 0, 0}; }
inline constexpr Atom raw(int a, int b) { return Atom{AtomKind::Raw, a, b}; }
inline constexpr Atom central(int a, int b) { return Atom{AtomKind::Central, a, b}; }
inline constexpr Atom mean_x_atom() { return raw(1, 0); }
inline constexpr Atom mean_p_atom() { return raw(0, 1); }
inline constexpr Atom variance_atom() { return central(2, 0); }
inline constexpr Atom skew_atom() { return central(3, 0); }
inline constexpr Atom kurt_atom() { return central(4, 0); }

std::string atom_name(const Atom& a);

/// Sorted (atom, exponent > 0) factors.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(Atom a, int exponent = 1);

  const std::vector<std::pair<Atom, int>>& factors() const noexcept { return factors_; }
  bool is_one() const noexcept { return factors_.empty(); }
  int exponent(const Atom& a) const noexcept;
  int degree() const noexcept;

  /// Product without the i^2 reduction; `Poly` applies that.
  Monomial operator*(const Monomial& other) const;
  Monomial without(const Atom& a) const;
  Monomial with_exponent(const Atom& a, int exponent) const;

  bool operator==(const Monomial&) const = default;

 private:
  std::vector<std::pair<Atom, int>> factors_;
};

/// Graded order: lower degree first, then lexicographic on factors.
struct MonomialLess {
  bool operator()(const Monomial& lhs, const Monomial& rhs) const;
};

class Poly {
 public:
  using TermMap = std::map<Monomial, Rational, MonomialLess>;

  Poly() = default;
  Poly(Rational c);  // NOLINT: constants convert implicitly
  Poly(int c) : Poly(Rational(c)) {}  // NOLINT
  Poly(Atom a, Rational c = 1);
  static Poly term(const Monomial& m, const Rational& c);

  const TermMap& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  Rational coefficient(const Monomial& m) const;
  bool contains(const Atom& a) const;
  bool contains_kind(AtomKind k) const;
  /// Every distinct atom appearing in any term, sorted.
  std::vector<Atom> atoms() const;

  Poly& operator+=(const Poly& other);
  Poly& operator-=(const Poly& other);
  Poly& operator*=(const Poly& other);
  Poly& operator*=(const Rational& c);

  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(Poly a, const Poly& b) { return a *= b; }
  friend Poly operator-(Poly a) { return a *= Rational(-1); }

  Poly pow(int n) const;

  /// Rewrites each atom via `f` (atoms for which `f` returns nullopt stay).
  Poly substitute(const std::function<std::optional<Poly>(const Atom&)>& f) const;
  Poly substitute(const Atom& target, const Poly& replacement) const;
  /// Exact partial derivative with respect to one atom.
  Poly partial(const Atom& a) const;

  /// Keeps only the terms whose monomial satisfies `keep`.
  Poly filter(const std::function<bool(const Monomial&)>& keep) const;

  bool operator==(const Poly& other) const { return terms_ == other.terms_; }

 private:
  void add_term(const Monomial& m, const Rational& c);
  TermMap terms_;
};

Poly make_poly(std::initializer_list<std::pair<Rational, Monomial>> terms);

/// Stable text rendering, e.g. "4 e - 9 lambda V^2 - 2 <p>^2".
std::string to_string(const Poly& p);
std::string to_string(const Monomial& m);
std::string rational_to_string(const Rational& r);
inline std::ostream& operator<<(std::ostream& os, const Poly& p) { return os << to_string(p); }

/// Best short rational whose double value equals `x` exactly; falls back to
/// the exact binary expansion.
Rational to_rational(double x);
double to_double(const Rational& r);

/// Numeric evaluator for a Poly with atom values bound through a slot table.
class CompiledPoly {
 public:
  using SlotOf = std::function<int(const Atom&)>;

  CompiledPoly() = default;
  CompiledPoly(const Poly& p, const SlotOf& slot_of);

  /// Sum of the terms at the given slot values.
  double evaluate(const double* slots) const noexcept;
  /// As `evaluate`, but throws NumericalFailure naming the first non-finite term.
  double evaluate_checked(const double* slots, const char* what) const;

  bool empty() const noexcept { return terms_.empty(); }

 private:
  struct Term {
    double coefficient;
    std::vector<std::pair<int, int>> factors;  // (slot, exponent)
    std::string text;
  };
  static double eval_term(const Term& t, const double* slots) noexcept;
  std::vector<Term> terms_;
};

}  // namespace qmoment::sym
