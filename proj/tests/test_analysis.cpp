#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qmoment/analysis.hpp"

using namespace qmoment;

namespace {

FixedPointReport branch(const std::vector<FixedPointReport>& v, FixedPointBranch b) {
  for (const auto& r : v)
    if (r.branch == b) return r;
  FAIL("branch missing");
  return {};
}

ClosedSystem make(ScenarioKind k, double w, double l, double e, ClosureRule rule = ClosureRule::gaussian()) {
  return assemble_system(Scenario(k, w, l, e), rule);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

IntegrateOptions adaptive(double tol, double sample) {
  IntegrateOptions o;
  o.control.rtol = o.control.atol = tol;
  o.control.sample_interval = sample;
  return o;
}

}  // namespace

TEST_CASE("analytic fixed points reproduce the reference values") {
  const auto q = analytic_fixed_points(make(ScenarioKind::Quartic, 0, 1, 0.5));
  CHECK(branch(q, FixedPointBranch::QuarticCenter).location.var == doctest::Approx(std::sqrt(2.0 / 9.0)).epsilon(1e-14));

  const auto v = analytic_fixed_points(make(ScenarioKind::Volcano, 1, 0.1, 0.8));
  CHECK(branch(v, FixedPointBranch::VolcanoMinus).location.var == doctest::Approx(1.04633).epsilon(5e-6));

  const auto a = analytic_fixed_points(make(ScenarioKind::DoubleWell, 1, 0.1, -0.6));
  const auto& ap = branch(a, FixedPointBranch::DoubleWellA_plus);
  CHECK(ap.location.var == doctest::Approx(3.72941).epsilon(5e-6));
  CHECK(ap.classification() == Stability::Centre);

  const auto b = analytic_fixed_points(make(ScenarioKind::DoubleWell, 1, 0.1, -0.5));
  const auto& bm = branch(b, FixedPointBranch::DoubleWellB_minus);
  REQUIRE(bm.exists);
  CHECK(bm.location.var == doctest::Approx(1.51949).epsilon(5e-6));
  CHECK(bm.location.mean_x * bm.location.mean_x == doctest::Approx((1 - 0.3 * bm.location.var) / 0.1));

  CHECK_THROWS_AS(analytic_fixed_points(assemble_system(
                      Scenario(ScenarioKind::DrivenDoubleWell, 1, 1, 0, 1, 0.1, 1), ClosureRule::gaussian())),
                  UnsupportedError);
}

TEST_CASE("property: analytic branches are stationary and Newton reconverges") {
  std::vector<ClosedSystem> systems;
  for (auto rule : {ClosureRule::gaussian(), ClosureRule::beta_kurtosis(0.8),
                    ClosureRule::phenomenological_skew(0.5, 0.2), ClosureRule::phenomenological_skew(1.0 / 0.3, 0.0)}) {
    for (double e : {0.1, 0.5, 3.0}) systems.push_back(make(ScenarioKind::Quartic, 0, 1, e, rule));
    systems.push_back(make(ScenarioKind::Quartic, 1, 0.5, 0.7, rule));
    for (double e : {0.2, 0.8, 1.0}) systems.push_back(make(ScenarioKind::Volcano, 1, 0.1, e, rule));
    for (double e : {-1.0, -0.6, -0.5, -0.3, 0.4}) systems.push_back(make(ScenarioKind::DoubleWell, 1, 0.1, e, rule));
  }
  int checked = 0;
  for (const auto& sys : systems) {
    const auto all = analytic_fixed_points(sys);
    for (const auto& r : all) {
      if (!r.exists) continue;
      ++checked;
      CHECK(rhs_residual(sys, r.location) < kNewtonTol);
      // a 10% kick cannot stay in the basin when another branch sits within reach
      bool crowded = false;
      for (const auto& o : all)
        if (&o != &r && o.exists && std::abs(o.location.var - r.location.var) < 0.25 * r.location.var &&
            std::abs(o.location.mean_x - r.location.mean_x) < 0.25 * std::max(1.0, std::abs(r.location.mean_x)))
          crowded = true;
      if (crowded) continue;
      for (double f : {0.9, 1.1}) {
        MomentState guess = r.location;
        guess.var *= f;
        guess.mean_x *= f;
        const auto n = newton_fixed_point(sys, guess);
        INFO(to_string(r.branch), " e=", sys.scenario().energy(), " mode=", to_string(sys.rule().mode), " f=", f);
        CHECK(n.branch == FixedPointBranch::NumericNewton);
        CHECK(rhs_residual(sys, n.location) < kNewtonTol);
        CHECK(rel(n.location.var, r.location.var) < 1e-10);
        if (r.location.mean_x != 0.0) CHECK(rel(n.location.mean_x, r.location.mean_x) < 1e-10);
        else CHECK(std::abs(n.location.mean_x) < 1e-10);
      }
    }
  }
  CHECK(checked > 40);
}

TEST_CASE("Newton examples") {
  const auto sys = make(ScenarioKind::Quartic, 0, 1, 0.5);
  const auto n = newton_fixed_point(sys, {0.01, 0.0, 0.4, 0.0});
  CHECK(std::abs(n.location.mean_x) < 1e-12);
  CHECK(n.location.var == doctest::Approx(0.4714045).epsilon(1e-7));
  CHECK(rel(n.location.var, std::sqrt(2.0 / 9.0)) < 1e-10);

  const MomentState exact{0.0, 0.0, 0.5, 0.0};
  const auto quad = make(ScenarioKind::Quartic, 0, 1, 9.0 / 16.0);  // V* = 1/2 exactly
  const auto z = newton_fixed_point(quad, exact);
  CHECK(z.iterations == 0);
  CHECK(z.location == exact);

  const auto vol = make(ScenarioKind::Volcano, 1, 0.1, 0.8);
  const auto& plus = branch(analytic_fixed_points(vol), FixedPointBranch::VolcanoPlus);
  const auto np = newton_fixed_point(vol, {0.0, 0.0, 1.05 * plus.location.var, 0.0});
  CHECK(rel(np.location.var, plus.location.var) < 1e-10);
  CHECK(np.classification() != Stability::Centre);

  CHECK_THROWS_AS(newton_fixed_point(sys, {0.0, 0.0, -1.0, 0.0}), ConstructionError);
  CHECK_THROWS_AS(newton_fixed_point(sys, {0.3, 0.0, 2.0, 0.0}, 1), NewtonFailure);
}

TEST_CASE("quartic linearization") {
  const auto sys = make(ScenarioKind::Quartic, 0, 1, 0.5);
  const auto& c = branch(analytic_fixed_points(sys), FixedPointBranch::QuarticCenter);
  const double vstar = c.location.var;
  REQUIRE(c.linear.linear_frequencies.size() == 2);
  CHECK(c.classification() == Stability::Centre);
  CHECK(c.linear.from_block);
  CHECK(std::abs(c.linear.linear_frequencies[0] - std::sqrt(3 * vstar)) < 1e-10);
  CHECK(std::abs(c.linear.linear_frequencies[1] - std::sqrt(12 * std::sqrt(0.5))) < 1e-10);
  CHECK(c.linear.linear_frequencies[0] == doctest::Approx(1.18921).epsilon(5e-6));
  CHECK(c.linear.linear_frequencies[1] == doctest::Approx(2.91295).epsilon(5e-6));

  // the general eigensolver agrees with the block route
  auto general = general_eigenvalues(c.linear.jacobian);
  std::vector<double> im;
  for (const auto& z : general) {
    CHECK(std::abs(z.real()) < 1e-10);
    if (z.imag() > 0) im.push_back(z.imag());
  }
  std::sort(im.begin(), im.end());
  REQUIRE(im.size() == 2);
  CHECK(std::abs(im[0] - c.linear.linear_frequencies[0]) < 1e-10);
  CHECK(std::abs(im[1] - c.linear.linear_frequencies[1]) < 1e-10);
}

TEST_CASE("volcano and double-well stability") {
  const auto vol = make(ScenarioKind::Volcano, 1, 0.1, 0.8);
  const auto& vm = branch(analytic_fixed_points(vol), FixedPointBranch::VolcanoMinus);
  CHECK(4.5 * 0.1 * vm.location.var == doctest::Approx(0.4708).epsilon(1e-4));
  CHECK(vm.classification() == Stability::Centre);
  CHECK_FALSE(branch(analytic_fixed_points(make(ScenarioKind::Volcano, 1, 0.1, 1.2)), FixedPointBranch::VolcanoMinus).exists);

  const double flip = -1.0 / (12 * 0.1);
  auto origin = [&](double e, ClosureRule rule) {
    return branch(analytic_fixed_points(make(ScenarioKind::DoubleWell, 1, 0.1, e, rule)),
                  FixedPointBranch::DoubleWellA_plus);
  };
  CHECK(origin(flip - 1e-6, ClosureRule::gaussian()).classification() == Stability::Saddle);
  CHECK(origin(flip + 1e-6, ClosureRule::gaussian()).classification() == Stability::Centre);
  const auto skew = ClosureRule::phenomenological_skew(1.0 / (3 * 0.1), 0.0);
  const double edge = -1.0 / (9 * 0.1);
  CHECK(origin(edge + 1e-6, ClosureRule::gaussian()).classification() == Stability::Saddle);
  CHECK(origin(edge + 1e-6, skew).classification() == Stability::Centre);
  CHECK(origin(flip - 1e-6, skew).classification() == Stability::Centre);
  CHECK_FALSE(origin(edge - 1e-6, skew).exists);
}

TEST_CASE("displaced double-well trace and determinant conditions") {
  for (double e : {-2.0, -1.0, -0.5, -0.3}) {
    const auto sys = make(ScenarioKind::DoubleWell, 1, 0.1, e);
    for (auto b : {FixedPointBranch::DoubleWellB_minus, FixedPointBranch::DoubleWellB_plus}) {
      const auto& r = branch(analytic_fixed_points(sys), b);
      if (!r.exists) continue;
      const double v = r.location.var;
      CHECK(r.linear.block_trace == doctest::Approx(-2 * (5 - 1.2 * v)).epsilon(1e-10));
      CHECK(r.linear.block_det == doctest::Approx(8 * (1 - 0.3 * v) * (2 - 0.9 * v)).epsilon(1e-10));
      REQUIRE(r.trace_condition.has_value());
      const bool centre = r.classification() == Stability::Centre;
      if (centre) CHECK((*r.trace_condition && *r.det_condition));
      else CHECK_FALSE((*r.trace_condition && *r.det_condition &&
                        r.linear.block_trace * r.linear.block_trace >= 4 * r.linear.block_det));
    }
  }
  CHECK(branch(analytic_fixed_points(make(ScenarioKind::DoubleWell, 1, 0.1, -0.5)), FixedPointBranch::DoubleWellB_minus)
            .classification() == Stability::Centre);
}

TEST_CASE("existence thresholds") {
  auto find = [](const std::vector<EnergyThreshold>& v, const std::string& name) {
    for (const auto& t : v)
      if (t.name == name) return t.energy;
    FAIL("threshold missing");
    return 0.0;
  };
  const auto vol = existence_thresholds(Scenario(ScenarioKind::Volcano, 1, 0.1, 0.0), ClosureRule::gaussian());
  CHECK(find(vol, "volcano_exist") == doctest::Approx(1.11111).epsilon(5e-6));
  const Scenario dw(ScenarioKind::DoubleWell, 1, 0.1, 0.0);
  const auto g = existence_thresholds(dw, ClosureRule::gaussian());
  CHECK(find(g, "dw_A_exist") == doctest::Approx(-1.0 / 0.9));
  CHECK(find(g, "dw_A_stable") == doctest::Approx(-0.83333).epsilon(5e-6));
  CHECK(find(g, "dw_B_exist") == doctest::Approx(2.0 / 0.9 - 2.5));
  const auto s = existence_thresholds(dw, ClosureRule::phenomenological_skew(1.0 / 0.3, 0.0));
  CHECK(find(s, "dw_A_stable") == doctest::Approx(-1.0 / 0.9));

  // the displaced branch disappears exactly at its threshold
  const double eb = find(g, "dw_B_exist");
  CHECK(branch(analytic_fixed_points(make(ScenarioKind::DoubleWell, 1, 0.1, eb - 1e-6)), FixedPointBranch::DoubleWellB_minus).exists);
  CHECK_FALSE(branch(analytic_fixed_points(make(ScenarioKind::DoubleWell, 1, 0.1, eb + 1e-6)), FixedPointBranch::DoubleWellB_minus).exists);
}

TEST_CASE("property: volcano small-energy limit") {
  const double e = 0.01 / (9 * 0.1);
  const auto& vm = branch(analytic_fixed_points(make(ScenarioKind::Volcano, 1, 0.1, e)), FixedPointBranch::VolcanoMinus);
  CHECK(rel(vm.location.var, e) < 0.01);
}

TEST_CASE("classical period") {
  CHECK(classical_period(PolynomialPotential(0.5, 0.0), 0.3).period == doctest::Approx(2 * std::numbers::pi).epsilon(1e-13));

  const auto q = classical_period(PolynomialPotential(0.0, 0.25), 1.0);
  CHECK(q.period == doctest::Approx(q.quartic_period).epsilon(1e-12));
  CHECK(q.period == doctest::Approx(5.2441).epsilon(1e-4));
  CHECK(std::abs(q.omega_sq - 1.4356) < 1e-3);
  CHECK(std::isnan(q.small_lambda_period));
  CHECK(q.interpolated_omega_sq == doctest::Approx(std::sqrt(2.0)));

  // lambda E / w^4 = 0.01
  const auto s = classical_period(PolynomialPotential(0.5, 0.25 * 0.01), 1.0);
  CHECK(s.small_lambda_period == doctest::Approx(2 * std::numbers::pi * (1 - 0.0075)));
  CHECK(rel(s.period, s.small_lambda_period) < 2e-4);
  CHECK(rel(s.period, s.small_lambda_period) > 1e-6);

  CHECK_THROWS_AS(classical_period(PolynomialPotential(0.5, 0.25), 0.0), ConstructionError);
  CHECK_THROWS_AS(classical_period(PolynomialPotential(-0.5, 0.25), 1.0), ConstructionError);
}

TEST_CASE("shape-invariant packet") {
  const Scenario s(ScenarioKind::Quartic, 0, 1, 0.0);
  const auto p = shape_invariant_variance(s);
  CHECK(std::abs(p.vbar * p.vbar * p.vbar - 1.0 / 12.0) < 1e-15);
  CHECK(std::abs(p.residual) < 1e-14);
  CHECK(p.vbar == doctest::Approx(0.436790).epsilon(1e-6));
  CHECK(p.width_sq == 2 * p.variance);
  // the matching energy puts the fixed point exactly at this variance
  const auto fp = analytic_fixed_points(make(ScenarioKind::Quartic, 0, 1, p.energy));
  CHECK(rel(fp.front().location.var, p.variance) < 1e-14);
  CHECK_THROWS_AS(shape_invariant_variance(Scenario(ScenarioKind::Volcano, 1, 0.1, 0.5)), ConstructionError);
}

TEST_CASE("frequency measurement") {
  std::vector<double> t, x, v;
  for (int k = 0; k <= 2000; ++k) {
    t.push_back(0.01 * k);
    x.push_back(std::cos(1.7 * t.back() + 0.3));
    v.push_back(-1.7 * std::sin(1.7 * t.back() + 0.3));
  }
  const auto z = measure_frequency(t, x, v);
  CHECK(z.method == FrequencyMethod::ZeroCrossings);
  CHECK(z.frequency == doctest::Approx(1.7).epsilon(1e-9));
  CHECK(measure_frequency(t, x).frequency == doctest::Approx(1.7).epsilon(1e-4));
  CHECK(fourier_peak_frequency(t, x) == doctest::Approx(1.7).epsilon(1e-4));

  const auto sys = make(ScenarioKind::Quartic, 0, 1, 0.5);
  const auto tr = integrate(sys, {0.1, 0.0, 0.471405, 0.0}, 60.0, adaptive(1e-10, 0.01));
  const auto est = measure_frequency(tr);
  CHECK(est.method == FrequencyMethod::ZeroCrossings);
  CHECK(rel(est.frequency, 1.185) < 0.02);
}

TEST_CASE("property: Fourier peak converges to the linear frequency") {
  const auto sys = make(ScenarioKind::Quartic, 0, 1, 0.5);
  const double vstar = std::sqrt(2.0 / 9.0);
  const double target = std::sqrt(3 * vstar);
  double prev = INFINITY;
  for (double dx : {0.1, 0.05, 0.025}) {
    const auto tr = integrate(sys, {dx, 0.0, vstar, 0.0}, 200.0, adaptive(1e-11, 0.02));
    const double err = std::abs(fourier_peak_frequency(tr.times(), tr.channel(&MomentState::mean_x)) - target);
    CHECK(err < prev);
    prev = err;
  }
}
