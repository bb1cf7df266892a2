#include "qmoment/hierarchy.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "qmoment/error.hpp"

namespace qmoment {

using sym::Atom;
using sym::AtomKind;
using sym::Monomial;
using sym::Poly;
using sym::Rational;

namespace {

const Atom kX = sym::atom(AtomKind::OpX);
const Atom kP = sym::atom(AtomKind::OpP);
const Atom kHbar = sym::atom(AtomKind::Hbar);
const Atom kImag = sym::atom(AtomKind::Imag);
const Atom kCos = sym::atom(AtomKind::CosDrive);
const Atom kSin = sym::atom(AtomKind::SinDrive);

Rational binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  Rational r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Rational factorial(int n) {
  Rational r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

Poly xp(int a, int b) {
  Poly out(1);
  if (a > 0) out = Poly::term(Monomial(kX, a), 1);
  if (b > 0) out *= Poly::term(Monomial(kP, b), 1);
  return out;
}

// Calls f(a, b, coefficient part) for each term c * x^a p^b * rest.
template <class F>
Poly map_phase_space(const Poly& p, F&& f) {
  Poly out;
  for (const auto& [m, c] : p.terms()) {
    const int a = m.exponent(kX);
    const int b = m.exponent(kP);
    const Poly rest = Poly::term(m.without(kX).without(kP), c);
    out += f(a, b, rest);
  }
  return out;
}

// sum_k C(a,k) C(b,k) k! (s i hbar)^k x^{a-k} p^{b-k}
Poly reorder(int a, int b, const Rational& s) {
  const Poly step = Poly(kImag, s) * Poly(kHbar);
  Poly out;
  for (int k = 0; k <= std::min(a, b); ++k)
    out += Poly(binomial(a, k) * binomial(b, k) * factorial(k)) * step.pow(k) * xp(a - k, b - k);
  return out;
}

Poly divide_by_hbar(const Poly& p) {
  Poly out;
  for (const auto& [m, c] : p.terms()) {
    const int e = m.exponent(kHbar);
    if (e == 0) throw std::logic_error("commutator term without a factor of hbar: " + sym::to_string(m));
    out += Poly::term(m.with_exponent(kHbar, e - 1), c);
  }
  return out;
}

}  // namespace

SymbolicPotential SymbolicPotential::from_scenario(const Scenario& s) {
  SymbolicPotential out;
  const Poly w2 = Poly(sym::atom(AtomKind::Freq)).pow(2);
  const Poly lambda(sym::atom(AtomKind::Lambda));
  const bool wells = s.kind() == ScenarioKind::DoubleWell || s.kind() == ScenarioKind::DrivenDoubleWell;
  if (s.omega() != 0.0) out.c2 = w2 * Poly(Rational(wells ? -1 : 1, 2));
  if (s.lambda() != 0.0) out.c4 = lambda * Poly(Rational(s.kind() == ScenarioKind::Volcano ? -1 : 1, 4));
  if (s.driven()) {
    out.drive = Poly(sym::atom(AtomKind::DriveG));
    out.drive_freq = Poly(sym::atom(AtomKind::DriveFreq));
  }
  return out;
}

SymbolicPotential SymbolicPotential::from_numeric(const PolynomialPotential& pot) {
  SymbolicPotential out;
  out.c2 = Poly(sym::to_rational(pot.c2()));
  out.c4 = Poly(sym::to_rational(pot.c4()));
  if (pot.driven()) {
    out.drive = Poly(sym::to_rational(pot.drive_g()));
    out.drive_freq = Poly(sym::to_rational(pot.drive_omega()));
  }
  return out;
}

Poly SymbolicPotential::potential_symbol() const {
  return c2 * xp(2, 0) + c4 * xp(4, 0) + drive * Poly(kCos) * xp(1, 0);
}

Poly SymbolicPotential::hamiltonian_symbol() const {
  return Poly(Rational(1, 2)) * xp(0, 2) + potential_symbol();
}

Poly SymbolicPotential::mean_potential() const { return weyl::expectation(potential_symbol()); }

Poly SymbolicPotential::mean_virial() const {
  return weyl::expectation(xp(1, 0) * potential_symbol().partial(kX));
}

int SymbolicPotential::degree() const {
  if (!c4.is_zero()) return 4;
  if (!c2.is_zero()) return 2;
  if (!drive.is_zero()) return 1;
  return 0;
}

bool SymbolicPotential::is_pure_quartic() const { return c2.is_zero() && drive.is_zero(); }

namespace weyl {

Poly to_standard(const Poly& w) {
  return map_phase_space(w, [](int a, int b, const Poly& rest) {
    return rest * reorder(a, b, Rational(-1, 2));
  });
}

Poly from_standard(const Poly& s) {
  return map_phase_space(s, [](int a, int b, const Poly& rest) {
    return rest * reorder(a, b, Rational(1, 2));
  });
}

Poly standard_product(const Poly& lhs, const Poly& rhs) {
  return map_phase_space(lhs, [&](int a, int b, const Poly& lrest) {
    return map_phase_space(rhs, [&](int c, int d, const Poly& rrest) {
      // x^a (p^b x^c) p^d
      Poly middle = reorder(c, b, Rational(-1));
      Poly swapped = map_phase_space(middle, [&](int k, int l, const Poly& r) {
        return r * xp(a + k, l + d);
      });
      return lrest * rrest * swapped;
    });
  });
}

Poly commutator_over_ihbar(const Poly& a, const Poly& b) {
  const Poly sa = to_standard(a);
  const Poly sb = to_standard(b);
  const Poly comm = from_standard(standard_product(sa, sb) - standard_product(sb, sa));
  return divide_by_hbar(comm * Poly(kImag, -1));
}

Poly expectation(const Poly& w) {
  return map_phase_space(w, [](int a, int b, const Poly& rest) {
    if (a == 0 && b == 0) return rest;
    return rest * Poly(sym::raw(a, b));
  });
}

Poly monomial_symbol(MomentSymbol s) { return xp(s.x_order, s.p_order); }

}  // namespace weyl

MomentHierarchy::MomentHierarchy(SymbolicPotential pot) : pot_(std::move(pot)) {}

Poly MomentHierarchy::operator_eom(const Poly& w) const {
  Poly out = weyl::commutator_over_ihbar(w, pot_.hamiltonian_symbol());
  out += w.partial(kCos) * Poly(kSin, -1) * pot_.drive_freq;
  out += w.partial(kSin) * Poly(kCos) * pot_.drive_freq;
  return weyl::expectation(out);
}

Poly MomentHierarchy::raw_eom(MomentSymbol s) const {
  if (s.x_order < 0 || s.p_order < 0) throw ConstructionError("moment orders must be >= 0");
  if (s.order() == 0) return {};
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
  }
  Poly eom = operator_eom(weyl::monomial_symbol(s));
  std::lock_guard lock(mutex_);
  return cache_.emplace(s, std::move(eom)).first->second;
}

Poly MomentHierarchy::time_derivative(const Poly& expr) const {
  Poly out;
  for (const Atom& a : expr.atoms()) {
    Poly rate;
    switch (a.kind) {
      case AtomKind::Raw: rate = raw_eom({a.a, a.b}); break;
      case AtomKind::CosDrive: rate = Poly(kSin, -1) * pot_.drive_freq; break;
      case AtomKind::SinDrive: rate = Poly(kCos) * pot_.drive_freq; break;
      case AtomKind::MeanH:
        rate = weyl::expectation(pot_.hamiltonian_symbol().partial(kCos) * Poly(kSin, -1) *
                                 pot_.drive_freq);
        break;
      case AtomKind::Central:
      case AtomKind::VarRate:
        throw UnsupportedError(fmt::format(
            "time derivative of central symbol '{}'; convert to raw moments first", sym::atom_name(a)));
      case AtomKind::OpX:
      case AtomKind::OpP:
        throw UnsupportedError("time derivative of a phase-space symbol; use operator_eom");
      default: continue;  // constant parameters
    }
    out += expr.partial(a) * rate;
  }
  return out;
}

Poly MomentHierarchy::time_derivative(const Poly& expr, int order) const {
  Poly out = expr;
  for (int k = 0; k < order; ++k) out = time_derivative(out);
  return out;
}

Poly derive_raw_eom(const SymbolicPotential& pot, MomentSymbol s) {
  return MomentHierarchy(pot).raw_eom(s);
}

Poly second_time_derivative(const SymbolicPotential& pot, MomentSymbol s) {
  MomentHierarchy h(pot);
  return h.time_derivative(h.raw_eom(s));
}

Poly raw_to_central(const Poly& expr) {
  const Poly mx(sym::mean_x_atom());
  const Poly mp(sym::mean_p_atom());
  auto centred = [](int i, int j) -> Poly {
    if (i + j == 0) return 1;
    if (i + j == 1) return 0;
    if (i == 1 && j == 1) return Poly(sym::atom(AtomKind::VarRate), Rational(1, 2));
    return Poly(sym::central(i, j));
  };
  return expr.substitute([&](const Atom& a) -> std::optional<Poly> {
    if (a.kind != AtomKind::Raw || a.a + a.b < 2) return std::nullopt;
    Poly out;
    for (int i = 0; i <= a.a; ++i)
      for (int j = 0; j <= a.b; ++j)
        out += Poly(binomial(a.a, i) * binomial(a.b, j)) * mx.pow(a.a - i) * mp.pow(a.b - j) *
               centred(i, j);
    return out;
  });
}

Poly central_to_raw(const Poly& expr) {
  const Poly neg_mx(sym::mean_x_atom(), -1);
  const Poly neg_mp(sym::mean_p_atom(), -1);
  auto expand = [&](int i, int j) {
    Poly out;
    for (int k = 0; k <= i; ++k)
      for (int l = 0; l <= j; ++l) {
        const Poly moment = (k + l == 0) ? Poly(1) : Poly(sym::raw(k, l));
        out += Poly(binomial(i, k) * binomial(j, l)) * neg_mx.pow(i - k) * neg_mp.pow(j - l) * moment;
      }
    return out;
  };
  return expr.substitute([&](const Atom& a) -> std::optional<Poly> {
    if (a.kind == AtomKind::Central) return expand(a.a, a.b);
    if (a.kind == AtomKind::VarRate) return Poly(2) * expand(1, 1);
    return std::nullopt;
  });
}

bool is_real_hbar_even(const Poly& expr) {
  for (const auto& [m, c] : expr.terms())
    if (m.exponent(kImag) != 0 || m.exponent(kHbar) % 2 != 0) return false;
  return true;
}

int max_moment_order(const Poly& expr) {
  int best = 0;
  for (const Atom& a : expr.atoms())
    if (a.kind == AtomKind::Raw || a.kind == AtomKind::Central) best = std::max(best, a.a + a.b);
  return best;
}

X3Verification verify_x3_fourth_derivative(const SymbolicPotential& pot) {
  if (!pot.is_pure_quartic())
    throw UnsupportedError("the <x^3> fourth-derivative identity holds for the pure quartic only");
  MomentHierarchy h(pot);
  X3Verification out;
  // lambda enters the identity through c4 = lambda / 4.
  const Poly lambda = Poly(4) * pot.c4;
  const Poly hbar(kHbar);

  Poly d = Poly(sym::raw(3, 0));
  for (int k = 1; k <= 4; ++k) {
    d = h.time_derivative(d);
    out.trail.push_back(format_equation("<x^3>", k, d));
  }
  out.lhs = d;

  const Poly x5_dd = h.time_derivative(Poly(sym::raw(5, 0)), 2);
  out.trail.push_back(format_equation("<x^5>", 2, x5_dd));
  out.rhs = Poly(Rational(-63, 10)) * lambda * x5_dd +
            Poly(9) * lambda * hbar.pow(2) * Poly(sym::mean_x_atom()) -
            Poly(Rational(9, 2)) * lambda.pow(2) * Poly(sym::raw(7, 0));
  out.difference = out.lhs - out.rhs;
  out.hbar_terms = out.lhs.filter([](const Monomial& m) { return m.exponent(kHbar) > 0; });
  out.equal = out.difference.is_zero();
  return out;
}

std::string X3Verification::report() const {
  std::string out;
  for (const auto& line : trail) out += line + "\n";
  out += "lhs  = " + sym::to_string(lhs) + "\n";
  out += "rhs  = " + sym::to_string(rhs) + "\n";
  out += "diff = " + sym::to_string(difference) + "\n";
  out += "hbar terms = " + sym::to_string(hbar_terms) + "\n";
  out += equal ? "equal\n" : "NOT equal\n";
  return out;
}

std::string moment_label(MomentSymbol s) { return sym::atom_name(sym::raw(s.x_order, s.p_order)); }

std::string format_equation(std::string_view subject, int order, const Poly& rhs) {
  if (order == 1) return fmt::format("d/dt {} = {}", subject, sym::to_string(rhs));
  return fmt::format("d^{}/dt^{} {} = {}", order, order, subject, sym::to_string(rhs));
}

}  // namespace qmoment
