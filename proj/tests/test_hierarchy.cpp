#include "doctest.h"

#include "qmoment/error.hpp"
#include "qmoment/hierarchy.hpp"

using namespace qmoment;
using sym::AtomKind;
using sym::Poly;
using sym::Rational;

namespace {

const Poly lam(sym::atom(AtomKind::Lambda));
const Poly om(sym::atom(AtomKind::Freq));
const Poly hb(sym::atom(AtomKind::Hbar));
const Poly gg(sym::atom(AtomKind::DriveG));
const Poly cosd(sym::atom(AtomKind::CosDrive));
Poly r(int a, int b) { return Poly(sym::raw(a, b)); }

SymbolicPotential quartic() { return SymbolicPotential::from_scenario(Scenario(ScenarioKind::Quartic, 0, 1, 0.5)); }

std::vector<SymbolicPotential> all_potentials() {
  return {quartic(),
          SymbolicPotential::from_scenario(Scenario(ScenarioKind::Quartic, 1, 1, 0.5)),
          SymbolicPotential::from_scenario(Scenario(ScenarioKind::Volcano, 1, 0.1, 1)),
          SymbolicPotential::from_scenario(Scenario(ScenarioKind::DoubleWell, 1, 1, 0)),
          SymbolicPotential::from_scenario(Scenario(ScenarioKind::DrivenDoubleWell, 1, 1, 0, 1, 1, 1)),
          SymbolicPotential::from_numeric(PolynomialPotential(0.5, -0.025))};
}

// Independent route: Moyal bracket as the sine series of the Poisson operator.
Poly nth_partial(Poly f, const sym::Atom& a, int n) {
  for (int k = 0; k < n; ++k) f = f.partial(a);
  return f;
}

Poly moyal_bracket(const Poly& a, const Poly& h) {
  const auto x = sym::atom(AtomKind::OpX);
  const auto p = sym::atom(AtomKind::OpP);
  Poly out;
  Rational fact = 1;
  for (int n = 1; n <= 15; n += 2) {
    if (n > 1) fact *= Rational((n - 1) * n);
    const int j = (n - 1) / 2;
    Rational c = Rational(j % 2 == 0 ? 1 : -1) / fact;
    Poly lambda_n;
    Rational binom = 1;
    for (int k = 0; k <= n; ++k) {
      if (k > 0) binom = binom * (n - k + 1) / k;
      Poly term = nth_partial(nth_partial(a, x, n - k), p, k) * nth_partial(nth_partial(h, p, n - k), x, k);
      lambda_n += Poly(k % 2 == 0 ? binom : Rational(-binom)) * term;
    }
    out += Poly(c) * (hb * Poly(Rational(1, 2))).pow(2 * j) * lambda_n;
  }
  return out;
}

}  // namespace

TEST_CASE("first-order quartic equations") {
  const auto pot = quartic();
  CHECK(derive_raw_eom(pot, {1, 0}) == r(0, 1));
  CHECK(derive_raw_eom(pot, {0, 1}) == Poly(-1) * lam * r(3, 0));
  // <xp + px> is twice the Weyl moment <x p>
  CHECK(derive_raw_eom(pot, {2, 0}) == Poly(2) * r(1, 1));
  CHECK(derive_raw_eom(pot, {0, 0}).is_zero());
  CHECK(format_equation(moment_label({0, 1}), 1, derive_raw_eom(pot, {0, 1})) ==
        "d/dt <p> = -lambda <x^3>");
}

TEST_CASE("second time derivatives") {
  const auto pot = quartic();
  CHECK(second_time_derivative(pot, {1, 0}) == Poly(-1) * lam * r(3, 0));
  CHECK(second_time_derivative(pot, {2, 0}) == Poly(2) * r(0, 2) - Poly(2) * lam * r(4, 0));
  const auto harmonic =
      SymbolicPotential::from_scenario(Scenario(ScenarioKind::Quartic, 1, 0, 0.5));
  CHECK(second_time_derivative(harmonic, {1, 0}) == Poly(-1) * om.pow(2) * r(1, 0));
}

TEST_CASE("driven double well force and energy rate") {
  const auto pot =
      SymbolicPotential::from_scenario(Scenario(ScenarioKind::DrivenDoubleWell, 1, 1, 0, 1, 0.1, 10));
  CHECK(derive_raw_eom(pot, {0, 1}) == om.pow(2) * r(1, 0) - lam * r(3, 0) - gg * cosd);
  MomentHierarchy h(pot);
  const Poly dh = h.time_derivative(Poly(sym::atom(AtomKind::MeanH)));
  CHECK(dh == Poly(-1) * gg * Poly(sym::atom(AtomKind::DriveFreq)) *
                  Poly(sym::atom(AtomKind::SinDrive)) * r(1, 0));
}

TEST_CASE("commutator agrees with the Moyal bracket") {
  for (const auto& pot : all_potentials()) {
    const Poly h = pot.hamiltonian_symbol();
    for (int a = 0; a <= 6; ++a)
      for (int b = 0; a + b <= 6; ++b) {
        const Poly mono = weyl::monomial_symbol({a, b});
        CAPTURE(a);
        CAPTURE(b);
        CHECK(weyl::commutator_over_ihbar(mono, h) == moyal_bracket(mono, h));
      }
  }
}

TEST_CASE("Weyl and standard ordering round trip") {
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; b <= 5; ++b) {
      const Poly m = weyl::monomial_symbol({a, b});
      CHECK(weyl::from_standard(weyl::to_standard(m)) == m);
      CHECK(weyl::to_standard(weyl::from_standard(m)) == m);
    }
  // p x = x p - i hbar in standard order
  const Poly x = weyl::monomial_symbol({1, 0});
  const Poly p = weyl::monomial_symbol({0, 1});
  CHECK(weyl::standard_product(p, x) ==
        weyl::monomial_symbol({1, 1}) - Poly(sym::atom(AtomKind::Imag)) * hb);
}

TEST_CASE("property: equations are real and even in hbar") {
  for (const auto& pot : all_potentials()) {
    MomentHierarchy h(pot);
    for (int a = 0; a <= 7; ++a)
      for (int b = 0; a + b <= 7; ++b) CHECK(is_real_hbar_even(h.raw_eom({a, b})));
  }
}

TEST_CASE("property: commutator degree bound") {
  for (const auto& pot : all_potentials()) {
    MomentHierarchy h(pot);
    const int deg = pot.degree();
    for (int n = 1; n <= 7; ++n) CHECK(max_moment_order(h.raw_eom({n, 0})) <= n + deg - 1);
    for (int a = 0; a <= 6; ++a)
      for (int b = 0; a + b <= 6; ++b)
        CHECK(max_moment_order(h.raw_eom({a, b})) <= std::max(a + b, a + b + deg - 2));
  }
}

TEST_CASE("property: Ehrenfest exactness for quadratic potentials") {
  const auto harmonic = SymbolicPotential::from_scenario(Scenario(ScenarioKind::Quartic, 2, 0, 0.5));
  for (auto s : {MomentSymbol{1, 0}, MomentSymbol{0, 1}})
    CHECK(max_moment_order(derive_raw_eom(harmonic, s)) <= 1);
  CHECK(derive_raw_eom(harmonic, {0, 1}) == Poly(-1) * om.pow(2) * r(1, 0));
}

TEST_CASE("raw to central expansion") {
  const Poly m(sym::mean_x_atom());
  const Poly v(sym::variance_atom());
  const Poly s(sym::skew_atom());
  const Poly k(sym::kurt_atom());
  CHECK(raw_to_central(r(3, 0)) == m.pow(3) + Poly(3) * v * m + s);
  CHECK(raw_to_central(r(4, 0)) == k + Poly(4) * s * m + Poly(6) * v * m.pow(2) + m.pow(4));
  CHECK(raw_to_central(m) == m);
  const Poly w(sym::atom(AtomKind::VarRate));
  CHECK(raw_to_central(r(1, 1)) == Poly(Rational(1, 2)) * w + m * Poly(sym::mean_p_atom()));
  // idempotent on central expressions
  const Poly c = raw_to_central(r(5, 0) + r(2, 3));
  CHECK(raw_to_central(c) == c);
}

TEST_CASE("property: central and raw conversions are inverse up to order 7") {
  for (int a = 0; a <= 7; ++a)
    for (int b = 0; a + b <= 7; ++b) {
      if (a + b == 0) continue;
      const Poly rm = r(a, b);
      CHECK(central_to_raw(raw_to_central(rm)) == rm);
      if (a + b >= 2 && !(a == 1 && b == 1)) {
        const Poly cm(sym::central(a, b));
        CHECK(raw_to_central(central_to_raw(cm)) == cm);
      }
    }
  const Poly mixed = Poly(3) * r(2, 0) * r(1, 0) - lam * r(5, 2) + r(0, 1).pow(2);
  CHECK(central_to_raw(raw_to_central(mixed)) == mixed);
}

TEST_CASE("fourth derivative of <x^3> for the pure quartic") {
  const X3Verification v = verify_x3_fourth_derivative(quartic());
  CHECK(v.equal);
  CHECK(v.difference.is_zero());
  CHECK(v.hbar_terms == Poly(9) * lam * hb.pow(2) * r(1, 0));
  CHECK(v.lhs == Poly(-126) * lam * r(3, 2) + Poly(27) * lam.pow(2) * r(7, 0) +
                     Poly(9) * lam * hb.pow(2) * r(1, 0));
  CHECK(v.report().find("equal") != std::string::npos);

  const auto free = SymbolicPotential::from_scenario(Scenario(ScenarioKind::Quartic, 0, 0, 0));
  const X3Verification f = verify_x3_fourth_derivative(free);
  CHECK(f.lhs.is_zero());
  CHECK(f.equal);

  CHECK_THROWS_AS(verify_x3_fourth_derivative(SymbolicPotential::from_scenario(
                      Scenario(ScenarioKind::DoubleWell, 1, 1, 0))),
                  UnsupportedError);
}
