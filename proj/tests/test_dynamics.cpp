#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qmoment/dynamics.hpp"
#include "qmoment/error.hpp"

using namespace qmoment;

namespace {

ClosedSystem quartic_system(double e = 0.5) {
  return assemble_system(Scenario(ScenarioKind::Quartic, 0, 1, e), ClosureRule::gaussian());
}

IntegrateOptions rk4(double dt, double sample) {
  IntegrateOptions o;
  o.control.method = ode::Method::RK4;
  o.control.dt = dt;
  o.control.sample_interval = sample;
  return o;
}

IntegrateOptions adaptive(double tol, double sample) {
  IntegrateOptions o;
  o.control.rtol = o.control.atol = tol;
  o.control.sample_interval = sample;
  return o;
}

}  // namespace

TEST_CASE("rhs_eval examples") {
  const auto sys = quartic_system();
  const auto d = rhs_eval(sys, {0.1, 0.0, 0.471405, 0.0}, 0.0);
  CHECK(d.mean_x == 0.0);
  CHECK(d.mean_p == doctest::Approx(-0.1424215).epsilon(1e-12));
  const auto fp = rhs_eval(sys, {0.0, 0.0, std::sqrt(2.0 / 9.0), 0.0}, 0.0);
  CHECK(std::abs(fp.var_rate) < 1e-15);
  CHECK_THROWS_AS(rhs_eval(sys, {0.0, 0.0, 0.0, 0.0}, 0.0), NumericalFailure);

  const auto driven = assemble_system(Scenario(ScenarioKind::DrivenDoubleWell, 1, 1, 0, 1, 0.1, 1),
                                      ClosureRule::gaussian());
  MomentState st{0.0012, 0.0, 0.1, 0.0, 0.0, 0.0};
  CHECK(*rhs_eval(driven, st, 0.0).mean_h == 0.0);
  st.mean_h.reset();
  CHECK_THROWS_AS(rhs_eval(driven, st, 0.0), ConstructionError);
}

TEST_CASE("harmonic limit is exact") {
  const auto sys = assemble_system(Scenario(ScenarioKind::Quartic, 1, 0, 0.5), ClosureRule::gaussian());
  const double period = 2 * std::numbers::pi;
  const auto tr = integrate(sys, {0.1, 0.0, 0.5, 0.0}, 10 * period, rk4(period / 1000, 0.05));
  REQUIRE(tr.completed());
  double worst = 0.0;
  for (const auto& s : tr.states) worst = std::max(worst, std::abs(s.mean_x - 0.1 * std::cos(s.t)));
  CHECK(worst < 1e-6);
}

TEST_CASE("sample grid invariants") {
  const auto sys = quartic_system();
  const MomentState st0{0.1, 0.0, 0.471405, 0.0};
  for (auto opts : {rk4(1e-3, 0.03), adaptive(1e-9, 0.03)}) {
    const auto tr = integrate(sys, st0, 1.0, opts);
    REQUIRE(tr.completed());
    CHECK(tr.states.front() == st0);
    CHECK(tr.states.back().t == 1.0);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.states[i].t > tr.states[i - 1].t);
    CHECK(tr.size() == 35);
  }
}

TEST_CASE("adaptive and fixed-step agree") {
  const auto sys = quartic_system();
  const MomentState st0{0.1, 0.0, 0.471405, 0.0};
  const auto a = integrate(sys, st0, 10.0, adaptive(1e-11, 0.1));
  const auto b = integrate(sys, st0, 10.0, rk4(1e-3, 0.1));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.states[i].mean_x == doctest::Approx(b.states[i].mean_x).epsilon(1e-8));
    CHECK(a.states[i].var == doctest::Approx(b.states[i].var).epsilon(1e-8));
  }
}

TEST_CASE("property: RK4 is fourth order") {
  const auto sys = quartic_system();
  const MomentState st0{0.1, 0.0, 0.471405, 0.0};
  const double period = 2 * std::numbers::pi / 1.185;
  const auto ref = integrate(sys, st0, period, adaptive(1e-13, 0.05));
  auto max_err = [&](double dt) {
    const auto tr = integrate(sys, st0, period, rk4(dt, 0.05));
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
      worst = std::max({worst, std::abs(tr.states[i].mean_x - ref.states[i].mean_x),
                        std::abs(tr.states[i].var - ref.states[i].var)});
    return worst;
  };
  const double ratio = max_err(0.05) / max_err(0.025);
  CHECK(ratio > 13.0);
  CHECK(ratio < 19.0);
}

TEST_CASE("property: undriven energy residual stays at integrator level") {
  const auto sys = quartic_system();
  const auto tr = integrate(sys, {0.1, 0.0, 0.471405, 0.0}, 50.0, adaptive(1e-9, 0.05));
  REQUIRE(tr.energy_residual.size() == tr.size());
  double worst = 0.0;
  for (double r : tr.energy_residual) worst = std::max(worst, std::abs(r));
  CHECK(worst < 1e-6);
}

TEST_CASE("property: parity of symmetric scenarios") {
  for (const Scenario& s : {Scenario(ScenarioKind::Quartic, 0, 1, 0.5), Scenario(ScenarioKind::Volcano, 1, 0.1, 0.8),
                            Scenario(ScenarioKind::DoubleWell, 1, 0.1, -0.6)}) {
    const auto sys = assemble_system(s, ClosureRule::gaussian());
    const auto a = integrate(sys, {0.3, 0.1, 1.0, 0.0}, 10.0, rk4(1e-3, 0.1));
    const auto b = integrate(sys, {-0.3, -0.1, 1.0, 0.0}, 10.0, rk4(1e-3, 0.1));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.states[i].mean_x == -b.states[i].mean_x);
      CHECK(a.states[i].mean_p == -b.states[i].mean_p);
      CHECK(a.states[i].var == b.states[i].var);
      CHECK(a.states[i].var_rate == b.states[i].var_rate);
    }
  }
}

TEST_CASE("volcano below the critical energy stays bound") {
  const auto sys = assemble_system(Scenario(ScenarioKind::Volcano, 1, 0.1, 0.8), ClosureRule::gaussian());
  const auto tr = integrate(sys, {0.1, 0.0, 1.04633, 0.0}, 100.0, adaptive(1e-9, 0.05));
  REQUIRE(tr.completed());
  double worst = 0.0;
  int sign_changes = 0;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    worst = std::max(worst, std::abs(tr.states[i].mean_x));
    if ((tr.states[i].mean_x > 0) != (tr.states[i - 1].mean_x > 0)) ++sign_changes;
  }
  CHECK(worst < 1.0);
  CHECK(sign_changes > 10);
}

TEST_CASE("variance collapse aborts with a partial trajectory") {
  const auto sys = quartic_system(-1.0);
  const auto tr = integrate(sys, {0.0, 0.0, 0.1, 0.0}, 10.0, adaptive(1e-9, 0.01));
  CHECK(tr.status == RunStatus::VarianceCollapse);
  CHECK(tr.size() > 1);
  CHECK(tr.states.back().t < 10.0);
  CHECK(tr.message.find("variance") != std::string::npos);
}

TEST_CASE("runaway bound stops escapes") {
  const auto sys = assemble_system(Scenario(ScenarioKind::Volcano, 1, 0.1, 2.0), ClosureRule::gaussian());
  IntegrateOptions o = adaptive(1e-9, 0.01);
  o.runaway_bound = 10.0;
  const auto tr = integrate(sys, {0.1, 0.0, 1.0, 0.0}, 100.0, o);
  CHECK(tr.status == RunStatus::Runaway);
  REQUIRE(tr.final_state.has_value());
  CHECK(std::abs(tr.final_state->mean_x) > 10.0);
}

TEST_CASE("parallel bundle matches serial runs") {
  const auto sys = quartic_system();
  std::vector<MomentState> starts;
  for (int k = 0; k < 6; ++k) starts.push_back({0.05 * k, 0.0, 0.47, 0.0});
  const auto many = integrate_many(sys, starts, 5.0, adaptive(1e-9, 0.1));
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const auto one = integrate(sys, starts[k], 5.0, adaptive(1e-9, 0.1));
    CHECK(one.states == many[k].states);
  }
}

TEST_CASE("classical integration") {
  const PolynomialPotential dw(-0.5, 0.25);
  SUBCASE("energy conservation") {
    const auto tr = integrate_classical(dw, {0.5, 0.3, 0.0}, 100.0, adaptive(1e-12, 0.1));
    REQUIRE(tr.completed());
    const double e0 = classical_energy(dw, tr.states.front());
    double worst = 0.0;
    for (const auto& s : tr.states) worst = std::max(worst, std::abs(classical_energy(dw, s) - e0));
    CHECK(worst < 1e-8);
  }
  SUBCASE("separatrix turning point") {
    const ClassicalState turn{std::sqrt(2.0), 0.0, 0.0};
    CHECK(std::abs(classical_energy(dw, turn)) < 1e-15);
    const auto tr = integrate_classical(dw, turn, 10.0, adaptive(1e-12, 0.01));
    double xmax = 0.0, xmin = 10.0;
    for (const auto& s : tr.states) {
      xmax = std::max(xmax, s.x);
      xmin = std::min(xmin, s.x);
    }
    CHECK(xmax == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(xmin > 0.0);
  }
  SUBCASE("driven pair ends in different wells") {
    const PolynomialPotential driven(-0.5, 0.25, 0.1, 10.0);
    const auto a = integrate_classical(driven, {0.0014, 0.0, 0.0}, 60.0, adaptive(1e-10, 0.01));
    const auto b = integrate_classical(driven, {0.0015, 0.0, 0.0}, 60.0, adaptive(1e-10, 0.01));
    CHECK(a.states.back().x * b.states.back().x < 0.0);
  }
}

TEST_CASE("trajectory CSV format") {
  const auto sys = quartic_system();
  const auto tr = integrate(sys, {0.1, 0.0, 0.471405, 0.0}, 0.02, rk4(1e-3, 0.01));
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "t,x_mean,p_mean,var,var_rate,h_mean,energy_residual");
  CHECK(row == "0,0.10000000000000001,0,0.47140500000000002,0,,0");
  CHECK(format_number(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("invalid controls are rejected") {
  const auto sys = quartic_system();
  CHECK_THROWS_AS(integrate(sys, {0.1, 0.0, 0.47, 0.0}, 1.0, rk4(-1.0, 0.1)), ConstructionError);
  CHECK_THROWS_AS(integrate(sys, {0.1, 0.0, 0.47, 0.0}, 0.0, rk4(0.1, 0.1)), ConstructionError);
  CHECK_THROWS_AS(integrate(sys, {0.1, 0.0, 0.0, 0.0}, 1.0, rk4(0.1, 0.1)), ConstructionError);
  CHECK(ode::parse_method("rk4") == ode::Method::RK4);
  CHECK_THROWS_AS(ode::parse_method("euler"), ConfigError);
}
