#include "qmoment/closure.hpp"

#include <cmath>
#include <fmt/format.h>

#include "qmoment/error.hpp"

namespace qmoment {

using sym::Atom;
using sym::AtomKind;
using sym::Poly;
using sym::Rational;

std::string_view to_string(ClosureMode mode) {
  switch (mode) {
    case ClosureMode::GaussianS0: return "gaussian-s0";
    case ClosureMode::BetaKurtosis: return "beta-kurtosis";
    case ClosureMode::PhenomenologicalSkew: return "phenomenological-skew";
  }
  return "?";
}

ClosureMode parse_closure_mode(std::string_view text) {
  if (text == "gaussian-s0") return ClosureMode::GaussianS0;
  if (text == "beta-kurtosis") return ClosureMode::BetaKurtosis;
  if (text == "phenomenological-skew") return ClosureMode::PhenomenologicalSkew;
  throw ConfigError(fmt::format("unknown closure '{}'", text));
}

ClosureRule ClosureRule::gaussian() { return {}; }

ClosureRule ClosureRule::beta_kurtosis(double beta) {
  ClosureRule r;
  r.mode = ClosureMode::BetaKurtosis;
  r.beta = beta;
  r.validate();
  return r;
}

ClosureRule ClosureRule::phenomenological_skew(double beta1, double beta2, double beta) {
  ClosureRule r;
  r.mode = ClosureMode::PhenomenologicalSkew;
  r.beta = beta;
  r.beta1 = beta1;
  r.beta2 = beta2;
  r.validate();
  return r;
}

void ClosureRule::validate() const {
  for (double v : {beta, gamma, delta, beta1, beta2})
    if (!std::isfinite(v)) throw ConstructionError("closure parameters must be finite");
  if (!(beta > 0.0)) throw ConstructionError("closure beta must be > 0 (kurtosis is positive)");
  if (mode == ClosureMode::GaussianS0 && (beta != 1.0 || beta1 != 0.0 || beta2 != 0.0))
    throw ConstructionError("gaussian-s0 closure fixes beta = 1 and beta1 = beta2 = 0");
  if (mode == ClosureMode::BetaKurtosis && (beta1 != 0.0 || beta2 != 0.0))
    throw ConstructionError("beta-kurtosis closure sets S = 0; beta1 and beta2 must be 0");
}

Poly apply_closure(const Poly& expr, const ClosureRule& rule, ParameterBinding binding) {
  rule.validate();
  const bool free = binding == ParameterBinding::FreeSymbolic;
  auto param = [&](AtomKind k, double value, bool is_free) {
    return is_free ? Poly(sym::atom(k)) : Poly(sym::to_rational(value));
  };
  const Poly beta = param(AtomKind::Beta, rule.beta, free && rule.mode == ClosureMode::BetaKurtosis);
  const Poly gamma = param(AtomKind::Gamma, rule.gamma, free);
  const Poly delta = param(AtomKind::Delta, rule.delta, free);
  const bool skew_free = free && rule.mode == ClosureMode::PhenomenologicalSkew;
  const Poly beta1 = param(AtomKind::Beta1, rule.beta1, skew_free);
  const Poly beta2 = param(AtomKind::Beta2, rule.beta2, skew_free);

  const Poly m(sym::mean_x_atom());
  const Poly v(sym::variance_atom());
  const Poly s = rule.mode == ClosureMode::PhenomenologicalSkew ? beta1 * m + beta2 * m.pow(3) : Poly();

  const Poly central = raw_to_central(expr);
  return central.substitute([&](const Atom& a) -> std::optional<Poly> {
    if (a.kind != AtomKind::Central) return std::nullopt;
    if (a.a + a.b > 7)
      throw UnsupportedError(fmt::format("closure supports central moments up to order 7, got {}",
                                         sym::atom_name(a)));
    if (a.b != 0)
      throw UnsupportedError(fmt::format("no closure rule for {}", sym::atom_name(a)));
    switch (a.a) {
      case 2: return std::nullopt;
      case 3: return s;
      case 4: return Poly(3) * beta * v.pow(2);
      case 5: return gamma * v * s;
      case 7: return delta * v.pow(2) * s;
      default:
        throw UnsupportedError(fmt::format("no closure rule for {}", sym::atom_name(a)));
    }
  });
}

std::string_view state_var_name(StateVar v) {
  switch (v) {
    case StateVar::MeanX: return "x_mean";
    case StateVar::MeanP: return "p_mean";
    case StateVar::Var: return "var";
    case StateVar::VarRate: return "var_rate";
    case StateVar::MeanH: return "h_mean";
  }
  return "?";
}

int slot_of(const Atom& a) {
  switch (a.kind) {
    case AtomKind::Raw:
      if (a.a == 1 && a.b == 0) return kSlotMeanX;
      if (a.a == 0 && a.b == 1) return kSlotMeanP;
      return -1;
    case AtomKind::Central: return (a.a == 2 && a.b == 0) ? kSlotVar : -1;
    case AtomKind::VarRate: return kSlotVarRate;
    case AtomKind::MeanH: return kSlotMeanH;
    case AtomKind::CosDrive: return kSlotCos;
    case AtomKind::SinDrive: return kSlotSin;
    case AtomKind::Hbar: return kSlotHbar;
    case AtomKind::Freq: return kSlotOmega;
    case AtomKind::Lambda: return kSlotLambda;
    case AtomKind::DriveG: return kSlotDriveG;
    case AtomKind::DriveFreq: return kSlotDriveOmega;
    case AtomKind::Energy: return kSlotEnergy;
    case AtomKind::Beta: return kSlotBeta;
    case AtomKind::Gamma: return kSlotGamma;
    case AtomKind::Delta: return kSlotDelta;
    case AtomKind::Beta1: return kSlotBeta1;
    case AtomKind::Beta2: return kSlotBeta2;
    default: return -1;
  }
}

namespace {

Atom state_atom(StateVar v) {
  switch (v) {
    case StateVar::MeanX: return sym::mean_x_atom();
    case StateVar::MeanP: return sym::mean_p_atom();
    case StateVar::Var: return sym::variance_atom();
    case StateVar::VarRate: return sym::atom(AtomKind::VarRate);
    case StateVar::MeanH: return sym::atom(AtomKind::MeanH);
  }
  return {};
}

void check_atoms(const Poly& p, const char* what) {
  for (const Atom& a : p.atoms())
    if (slot_of(a) < 0)
      throw std::logic_error(fmt::format("closed {} contains unbound symbol {}", what, sym::atom_name(a)));
}

}  // namespace

ClosedSystem::ClosedSystem(Scenario s, ClosureRule r) : scenario_(std::move(s)), rule_(r) {}

ClosedSystem assemble_system(const Scenario& s, const ClosureRule& rule) {
  rule.validate();
  if (s.driven() && rule.mode != ClosureMode::GaussianS0)
    throw UnsupportedError(fmt::format("closure '{}' is not supported for the driven double well",
                                       to_string(rule.mode)));
  ClosedSystem sys(s, rule);
  sys.layout_ = {StateVar::MeanX, StateVar::MeanP, StateVar::Var, StateVar::VarRate};
  if (s.driven()) sys.layout_.push_back(StateVar::MeanH);

  const SymbolicPotential pot = SymbolicPotential::from_scenario(s);
  const MomentHierarchy h(pot);
  const Poly energy(sym::atom(s.driven() ? AtomKind::MeanH : AtomKind::Energy));
  const Poly p2 = Poly(2) * energy - Poly(2) * pot.mean_potential();

  const Poly mx(sym::mean_x_atom());
  const Poly var_raw = Poly(sym::raw(2, 0)) - mx.pow(2);
  const Poly var_dd = h.time_derivative(var_raw, 2).substitute(sym::raw(0, 2), p2);

  const auto bind = ParameterBinding::FreeSymbolic;
  sys.accel_mean_ = apply_closure(h.raw_eom({0, 1}), rule, bind);
  sys.accel_var_ = apply_closure(var_dd, rule, bind);
  if (s.driven())
    sys.energy_rate_ = apply_closure(h.time_derivative(Poly(sym::atom(AtomKind::MeanH))), rule, bind);
  sys.mean_potential_ = apply_closure(pot.mean_potential(), rule, bind);
  sys.mean_virial_ = apply_closure(pot.mean_virial(), rule, bind);

  check_atoms(sys.accel_mean_, "mean equation");
  check_atoms(sys.accel_var_, "variance equation");
  check_atoms(sys.energy_rate_, "energy equation");

  for (int eq = 0; eq < 2; ++eq) {
    const Poly& f = eq == 0 ? sys.accel_mean_ : sys.accel_var_;
    for (int k = 0; k < 5; ++k) sys.partials_[eq][k] = f.partial(state_atom(static_cast<StateVar>(k)));
  }

  sys.c_accel_mean_ = sym::CompiledPoly(sys.accel_mean_, slot_of);
  sys.c_accel_var_ = sym::CompiledPoly(sys.accel_var_, slot_of);
  sys.c_energy_rate_ = sym::CompiledPoly(sys.energy_rate_, slot_of);
  sys.c_potential_ = sym::CompiledPoly(sys.mean_potential_, slot_of);
  sys.c_virial_ = sym::CompiledPoly(sys.mean_virial_, slot_of);

  auto& p = sys.params_;
  p[kSlotHbar] = s.hbar();
  p[kSlotOmega] = s.omega();
  p[kSlotLambda] = s.lambda();
  p[kSlotDriveG] = s.drive_g();
  p[kSlotDriveOmega] = s.drive_omega();
  p[kSlotEnergy] = s.energy();
  p[kSlotBeta] = rule.beta;
  p[kSlotGamma] = rule.gamma;
  p[kSlotDelta] = rule.delta;
  p[kSlotBeta1] = rule.beta1;
  p[kSlotBeta2] = rule.beta2;
  p[kSlotCos] = 1.0;
  return sys;
}

void ClosedSystem::fill_slots(double t, const double* y, double* slots) const noexcept {
  for (int k = 0; k < kSlotCount; ++k) slots[k] = params_[k];
  slots[kSlotMeanX] = y[0];
  slots[kSlotMeanP] = y[1];
  slots[kSlotVar] = y[2];
  slots[kSlotVarRate] = y[3];
  if (driven()) {
    slots[kSlotMeanH] = y[4];
    const double phase = scenario_.drive_omega() * t;
    slots[kSlotCos] = std::cos(phase);
    slots[kSlotSin] = std::sin(phase);
  }
}

void ClosedSystem::evaluate_unchecked(double t, const double* y, double* dydt) const noexcept {
  double slots[kSlotCount];
  fill_slots(t, y, slots);
  dydt[0] = y[1];
  dydt[1] = c_accel_mean_.evaluate(slots);
  dydt[2] = y[3];
  dydt[3] = c_accel_var_.evaluate(slots);
  if (driven()) dydt[4] = c_energy_rate_.evaluate(slots);
}

void ClosedSystem::evaluate(double t, const double* y, double* dydt) const {
  for (std::size_t k = 0; k < dimension(); ++k)
    if (!std::isfinite(y[k]))
      throw NumericalFailure(fmt::format("non-finite state component {} at t = {}",
                                         state_var_name(layout_[k]), t));
  double slots[kSlotCount];
  fill_slots(t, y, slots);
  dydt[0] = y[1];
  dydt[1] = c_accel_mean_.evaluate_checked(slots, "d^2<x>/dt^2");
  dydt[2] = y[3];
  dydt[3] = c_accel_var_.evaluate_checked(slots, "d^2V/dt^2");
  if (driven()) dydt[4] = c_energy_rate_.evaluate_checked(slots, "d<H>/dt");
}

double ClosedSystem::reconstruct_energy(double t, const double* y, double dw_dt) const {
  double slots[kSlotCount];
  fill_slots(t, y, slots);
  const double m = y[0];
  const double p = y[1];
  const double accel = c_accel_mean_.evaluate(slots);
  const double p2 = 0.5 * (dw_dt + 2.0 * p * p + 2.0 * m * accel) + c_virial_.evaluate(slots);
  return 0.5 * p2 + c_potential_.evaluate(slots);
}

const Poly& ClosedSystem::accel_partial(int equation, StateVar wrt) const {
  if (equation < 0 || equation > 1) throw std::out_of_range("equation index must be 0 or 1");
  return partials_[equation][static_cast<int>(wrt)];
}

std::string ClosedSystem::dump() const {
  std::string out;
  out += format_equation("<x>", 2, accel_mean_) + "\n";
  out += format_equation("V", 2, accel_var_) + "\n";
  if (driven()) out += format_equation("<H>", 1, energy_rate_) + "\n";
  return out;
}

}  // namespace qmoment
