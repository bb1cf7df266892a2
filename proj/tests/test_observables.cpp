#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "qmoment/error.hpp"
#include "qmoment/observables.hpp"

using namespace qmoment;

namespace {

IntegrateOptions adaptive(double tol, double sample) {
  IntegrateOptions o;
  o.control.rtol = o.control.atol = tol;
  o.control.sample_interval = sample;
  return o;
}

double gaussian_mass(double m, double v, double b) {
  auto density = [&](double x) {
    return std::exp(-(x - m) * (x - m) / (2 * v)) / std::sqrt(2 * std::numbers::pi * v);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, -b, b, 15, 1e-15);
}

TrajectoryRecord synthetic(const std::vector<double>& t, const std::vector<double>& x) {
  TrajectoryRecord tr;
  for (std::size_t i = 0; i < t.size(); ++i) tr.states.push_back({x[i], 0.0, 1.0, 0.0, std::nullopt, t[i]});
  return tr;
}

}  // namespace

TEST_CASE("confinement probability") {
  CHECK(confinement_probability(0.0, 1e-14, 1.0) == 1.0);
  CHECK(confinement_probability(0.0, 1.0, INFINITY) == 1.0);
  const double b = std::sqrt(10.0);
  CHECK(std::abs(confinement_probability(0.0, 1.0, b) - gaussian_mass(0.0, 1.0, b)) < 1e-12);
  for (double m : {-3.0, -1.0, 0.4, 2.5, 5.0})
    for (double v : {0.01, 0.3, 1.0, 4.0}) {
      CHECK(confinement_probability(m, v, b) == confinement_probability(-m, v, b));
      CHECK(std::abs(confinement_probability(m, v, b) - gaussian_mass(m, v, b)) < 1e-12);
    }
  CHECK_THROWS_AS(confinement_probability(0.0, 0.0, 1.0), ConstructionError);
  CHECK_THROWS_AS(confinement_probability(0.0, 1.0, -1.0), ConstructionError);
}

TEST_CASE("property: confinement decreases with variance") {
  const double b = std::sqrt(10.0);
  double prev = 1.0;
  for (double v = 0.05; v < 20.0; v *= 1.3) {
    const double p = confinement_probability(0.0, v, b);
    if (prev < 1.0) CHECK(p < prev);
    else CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("escape detection") {
  const Scenario base(ScenarioKind::Volcano, 1, 0.1, 0.8);
  const double b = volcano_barrier(base);
  CHECK(b == doctest::Approx(std::sqrt(10.0)));

  const auto bound = integrate(assemble_system(base, ClosureRule::gaussian()), {0.1, 0.0, 1.04633, 0.0},
                               100.0, adaptive(1e-9, 0.05));
  CHECK_FALSE(escape_time(bound, b).escaped);
  CHECK_FALSE(escape_time(bound, INFINITY).escaped);

  double prev = INFINITY;
  for (double e : {1.2, 1.5, 2.0}) {
    const auto sys = assemble_system(base.with_energy(e), ClosureRule::gaussian());
    IntegrateOptions o = adaptive(1e-9, 0.01);
    o.runaway_bound = 10 * b;
    const auto tr = integrate(sys, {0.1, 0.0, 1.0, 0.0}, 100.0, o);
    const auto esc = escape_time(tr, b);
    REQUIRE(esc.escaped);
    CHECK(*esc.escape_time < prev);
    prev = *esc.escape_time;
    const auto prob = escape_time(tr, b, EscapeCriterion::ProbabilityBelowHalf);
    CHECK(prob.escaped);
  }
}

TEST_CASE("property: escape time is resampling invariant") {
  // smooth crossing, located from the samples alone
  const auto harm = assemble_system(Scenario(ScenarioKind::Quartic, 1, 0, 0.5), ClosureRule::gaussian());
  const auto h1 = escape_time(integrate(harm, {0.1, 0.0, 0.5, 0.0}, 5.0, adaptive(1e-12, 0.05)), 0.15);
  const auto h2 = escape_time(integrate(harm, {0.0, 0.2, 0.5, 0.0}, 5.0, adaptive(1e-12, 0.005)), 0.15);
  const auto h3 = escape_time(integrate(harm, {0.0, 0.2, 0.5, 0.0}, 5.0, adaptive(1e-12, 0.05)), 0.15);
  CHECK_FALSE(h1.escaped);
  REQUIRE(h2.escaped);
  CHECK(*h2.escape_time == doctest::Approx(std::asin(0.75)).epsilon(1e-8));
  CHECK(std::abs(*h2.escape_time - *h3.escape_time) < 1e-6);

  // finite-time blow-up past the ridge needs step-level location
  const auto sys = assemble_system(Scenario(ScenarioKind::Volcano, 1, 0.1, 1.5), ClosureRule::gaussian());
  IntegrateOptions coarse = adaptive(1e-11, 0.01);
  IntegrateOptions fine = adaptive(1e-11, 0.001);
  coarse.runaway_bound = fine.runaway_bound = 30.0;
  const double b = std::sqrt(10.0);
  coarse.escape_barrier = fine.escape_barrier = b;
  const auto a = escape_time(integrate(sys, {0.1, 0.0, 1.0, 0.0}, 20.0, coarse), b);
  const auto c = escape_time(integrate(sys, {0.1, 0.0, 1.0, 0.0}, 20.0, fine), b);
  REQUIRE(a.escaped);
  REQUIRE(c.escaped);
  CHECK(std::abs(*a.escape_time - *c.escape_time) < 1e-6);
}

TEST_CASE("divergence time") {
  const std::vector<double> t{0, 1, 2, 3, 4};
  const auto a = synthetic(t, {0, 0, 0, 0, 0});
  const auto b = synthetic(t, {0, 0.5, 1.0, 2.0, 4.0});
  const auto recs = divergence_time({a, a, b}, 1.5);
  REQUIRE(recs.size() == 3);
  CHECK_FALSE(recs[0].divergence_time.has_value());
  CHECK(*recs[1].divergence_time == doctest::Approx(2.5));
  CHECK(*earliest_divergence(recs) == doctest::Approx(2.5));

  // symmetric in the pair, non-increasing in epsilon
  CHECK(*divergence_time({b, a}, 1.5)[0].divergence_time == *recs[1].divergence_time);
  double prev = INFINITY;
  for (double eps : {0.1, 0.5, 1.0, 2.0, 3.0}) {
    const double d = *divergence_time({a, b}, eps)[0].divergence_time;
    CHECK(d <= prev + 0.0 * eps);
    CHECK(d >= 0.0);
  }
  for (double eps : {3.0, 2.0, 1.0, 0.5}) {
    const double d = *divergence_time({a, b}, eps)[0].divergence_time;
    CHECK(d <= prev);
    prev = d;
  }

  const auto shifted = synthetic({0, 1.5, 2, 3, 4}, {0, 0, 0, 0, 0});
  CHECK_THROWS_AS(divergence_time({a, shifted}, 1.0), ConstructionError);
  CHECK_THROWS_AS(divergence_time({a}, 1.0), ConstructionError);
}

TEST_CASE("variance fluctuation") {
  const auto constant = synthetic({0, 1, 2}, {0, 0, 0});
  CHECK(variance_fluctuation(constant).stddev == 0.0);
  CHECK(variance_fluctuation(constant).mean == 1.0);
  CHECK_THROWS_AS(variance_fluctuation(TrajectoryRecord{}), ConstructionError);

  const auto sys = assemble_system(Scenario(ScenarioKind::Quartic, 0, 1, 0.5), ClosureRule::gaussian());
  const double vstar = std::sqrt(2.0 / 9.0);
  const auto fixed = integrate(sys, {0.0, 0.0, vstar, 0.0}, 50.0, adaptive(1e-10, 0.05));
  CHECK(variance_fluctuation(fixed).stddev < 1e-9);

  const auto matched = integrate(sys, {0.1, 0.0, vstar, 0.0}, 50.0, adaptive(1e-10, 0.05));
  const auto wide = integrate(sys, {0.1, 0.0, 1.5 * vstar, 0.0}, 50.0, adaptive(1e-10, 0.05));
  CHECK(variance_fluctuation(matched).relative < variance_fluctuation(wide).relative);
}

TEST_CASE("energy audit") {
  const Scenario q(ScenarioKind::Quartic, 0, 1, 0.5);
  const auto sys = assemble_system(q, ClosureRule::gaussian());
  const auto tr = integrate(sys, {0.1, 0.0, 0.471405, 0.0}, 50.0, adaptive(1e-9, 0.05));
  const auto audit = energy_audit(tr, q, ClosureRule::gaussian());
  CHECK_FALSE(audit.driven);
  CHECK(audit.max_abs < 1e-6);
  const auto fixed = integrate(sys, {0.0, 0.0, std::sqrt(2.0 / 9.0), 0.0}, 10.0, adaptive(1e-9, 0.05));
  CHECK(energy_audit(fixed, sys).max_abs < 1e-14);

  const Scenario d(ScenarioKind::DrivenDoubleWell, 1, 1, 0, 1, 0.1, 1);
  const auto dsys = assemble_system(d, ClosureRule::gaussian());
  auto run = [&](double sample) {
    return integrate(dsys, {0.0012, 0.0, 0.25, 0.0, 0.0, 0.0}, 20.0, adaptive(1e-11, sample));
  };
  const auto a1 = energy_audit(run(0.02), dsys);
  const auto a2 = energy_audit(run(0.01), dsys);
  CHECK(a1.driven);
  CHECK(a1.residual.front() == 0.0);
  // central differences: halving the spacing cuts the residual about 4x
  const double ratio = a1.max_abs / a2.max_abs;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}
