#include "doctest.h"

#include <cmath>

#include "qmoment/error.hpp"
#include "qmoment/symbolic.hpp"

using namespace qmoment::sym;

TEST_CASE("imaginary unit squares to -1") {
  const Poly i(atom(AtomKind::Imag));
  CHECK(i * i == Poly(-1));
  CHECK(i.pow(3) == Poly(atom(AtomKind::Imag), -1));
  CHECK(i.pow(4) == Poly(1));
}

TEST_CASE("zero coefficients are pruned") {
  const Poly x(raw(1, 0));
  const Poly p = x + Poly(2) - x - Poly(2);
  CHECK(p.is_zero());
  CHECK(to_string(p) == "0");
}

TEST_CASE("text rendering is canonical") {
  const Poly lambda(atom(AtomKind::Lambda));
  const Poly e(atom(AtomKind::Energy));
  const Poly v(variance_atom());
  const Poly poly = Poly(4) * e - Poly(9) * lambda * v.pow(2) - Poly(2) * Poly(mean_p_atom()).pow(2);
  CHECK(to_string(poly) == "4 e - 2 <p>^2 - 9 lambda V^2");
  CHECK(to_string(Poly(Rational(-1, 2)) * Poly(raw(2, 1))) == "-1/2 <x^2 p>");
  CHECK(to_string(lambda * v * Poly(mean_x_atom()).pow(2)) == "lambda V <x>^2");
}

TEST_CASE("partial derivative and substitution") {
  const Poly x(raw(1, 0));
  const Poly v(variance_atom());
  const Poly f = x.pow(3) * v + Poly(5) * v;
  CHECK(f.partial(variance_atom()) == x.pow(3) + Poly(5));
  CHECK(f.partial(mean_x_atom()) == Poly(3) * x.pow(2) * v);
  const Poly g = f.substitute(variance_atom(), Poly(2) * x);
  CHECK(g == Poly(2) * x.pow(4) + Poly(10) * x);
}

TEST_CASE("to_rational recovers short fractions") {
  CHECK(to_rational(0.1) == Rational(1, 10));
  CHECK(to_rational(-0.25) == Rational(-1, 4));
  CHECK(to_rational(3.0) == Rational(3));
  CHECK(to_double(to_rational(0.471405)) == 0.471405);
  const double awkward = std::sqrt(2.0);
  CHECK(to_double(to_rational(awkward)) == awkward);
  CHECK_THROWS_AS(to_rational(NAN), qmoment::NumericalFailure);
}

TEST_CASE("compiled polynomial evaluates and reports non-finite terms") {
  const Poly poly = Poly(3) * Poly(raw(1, 0)).pow(2) - Poly(variance_atom());
  auto slot = [](const Atom& a) {
    if (a == mean_x_atom()) return 0;
    if (a == variance_atom()) return 1;
    return -1;
  };
  const CompiledPoly c(poly, slot);
  const double good[] = {2.0, 1.5};
  CHECK(c.evaluate(good) == doctest::Approx(10.5));
  const double bad[] = {INFINITY, 0.0};
  CHECK_THROWS_AS(c.evaluate_checked(bad, "test"), qmoment::NumericalFailure);
  CHECK_THROWS_AS(CompiledPoly(Poly(atom(AtomKind::Lambda)), slot), qmoment::UnsupportedError);
}
