#include "qmoment/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>

#include "qmoment/error.hpp"

namespace qmoment::sym {

std::string atom_name(const Atom& a) {
  switch (a.kind) {
    case AtomKind::Energy: return "e";
    case AtomKind::MeanH: return "<H>";
    case AtomKind::Hbar: return "hbar";
    case AtomKind::Freq: return "omega";
    case AtomKind::Lambda: return "lambda";
    case AtomKind::DriveG: return "g";
    case AtomKind::DriveFreq: return "Omega";
    case AtomKind::Beta: return "beta";
    case AtomKind::Beta1: return "beta1";
    case AtomKind::Beta2: return "beta2";
    case AtomKind::Gamma: return "gamma";
    case AtomKind::Delta: return "delta";
    case AtomKind::CosDrive: return "cos(Omega t)";
    case AtomKind::SinDrive: return "sin(Omega t)";
    case AtomKind::Imag: return "i";
    case AtomKind::OpX: return "x";
    case AtomKind::OpP: return "p";
    case AtomKind::VarRate: return "W";
    case AtomKind::Central:
      if (a.b == 0) {
        switch (a.a) {
          case 2: return "V";
          case 3: return "S";
          case 4: return "K";
          case 5: return "M5";
          case 7: return "M7";
          default: break;
        }
      }
      if (a.a == 0 && a.b == 2) return "<p^2>c";
      return fmt::format("C[{},{}]", a.a, a.b);
    case AtomKind::Raw: {
      std::string body;
      auto part = [](const char* s, int n) {
        return n == 1 ? std::string(s) : fmt::format("{}^{}", s, n);
      };
      if (a.a > 0) body += part("x", a.a);
      if (a.b > 0) {
        if (!body.empty()) body += ' ';
        body += part("p", a.b);
      }
      if (body.empty()) body = "1";
      return "<" + body + ">";
    }
  }
  return "?";
}

Monomial::Monomial(Atom a, int exponent) {
  if (exponent > 0) factors_.emplace_back(a, exponent);
}

int Monomial::exponent(const Atom& a) const noexcept {
  for (const auto& [at, e] : factors_)
    if (at == a) return e;
  return 0;
}

int Monomial::degree() const noexcept {
  int d = 0;
  for (const auto& f : factors_) d += f.second;
  return d;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  auto i = factors_.begin();
  auto j = other.factors_.begin();
  while (i != factors_.end() || j != other.factors_.end()) {
    if (j == other.factors_.end() || (i != factors_.end() && i->first < j->first)) {
      out.factors_.push_back(*i++);
    } else if (i == factors_.end() || j->first < i->first) {
      out.factors_.push_back(*j++);
    } else {
      out.factors_.emplace_back(i->first, i->second + j->second);
      ++i;
      ++j;
    }
  }
  return out;
}

Monomial Monomial::without(const Atom& a) const { return with_exponent(a, 0); }

Monomial Monomial::with_exponent(const Atom& a, int exponent) const {
  Monomial out;
  bool placed = false;
  for (const auto& f : factors_) {
    if (!placed && a < f.first) {
      if (exponent > 0) out.factors_.emplace_back(a, exponent);
      placed = true;
    }
    if (f.first == a) {
      if (exponent > 0) out.factors_.emplace_back(a, exponent);
      placed = true;
      continue;
    }
    out.factors_.push_back(f);
  }
  if (!placed && exponent > 0) out.factors_.emplace_back(a, exponent);
  return out;
}

bool MonomialLess::operator()(const Monomial& lhs, const Monomial& rhs) const {
  const int dl = lhs.degree();
  const int dr = rhs.degree();
  if (dl != dr) return dl < dr;
  return lhs.factors() < rhs.factors();
}

Poly::Poly(Rational c) {
  if (c != 0) terms_.emplace(Monomial{}, std::move(c));
}

Poly::Poly(Atom a, Rational c) {
  if (c != 0) terms_.emplace(Monomial(a), std::move(c));
}

Poly Poly::term(const Monomial& m, const Rational& c) {
  Poly p;
  p.add_term(m, c);
  return p;
}

void Poly::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Rational Poly::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Rational(0) : it->second;
}

bool Poly::contains(const Atom& a) const {
  for (const auto& [m, c] : terms_)
    if (m.exponent(a) > 0) return true;
  return false;
}

bool Poly::contains_kind(AtomKind k) const {
  for (const auto& [m, c] : terms_)
    for (const auto& f : m.factors())
      if (f.first.kind == k) return true;
  return false;
}

std::vector<Atom> Poly::atoms() const {
  std::set<Atom> seen;
  for (const auto& [m, c] : terms_)
    for (const auto& f : m.factors()) seen.insert(f.first);
  return {seen.begin(), seen.end()};
}

Poly& Poly::operator+=(const Poly& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Poly& Poly::operator-=(const Poly& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Poly& Poly::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, coef] : terms_) coef *= c;
  return *this;
}

Poly& Poly::operator*=(const Poly& other) {
  static const Atom imag = atom(AtomKind::Imag);
  Poly out;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) {
      Monomial m = ma * mb;
      Rational c = ca * cb;
      const int ie = m.exponent(imag);
      if (ie >= 2) {
        if ((ie / 2) % 2 == 1) c = -c;
        m = m.with_exponent(imag, ie % 2);
      }
      out.add_term(m, c);
    }
  }
  terms_ = std::move(out.terms_);
  return *this;
}

Poly Poly::pow(int n) const {
  if (n < 0) throw UnsupportedError("negative polynomial power");
  Poly result(1);
  Poly base = *this;
  while (n > 0) {
    if (n & 1) result *= base;
    n >>= 1;
    if (n > 0) base *= base;
  }
  return result;
}

Poly Poly::substitute(const std::function<std::optional<Poly>(const Atom&)>& f) const {
  std::map<std::pair<Atom, int>, Poly> power_cache;
  std::map<Atom, std::optional<Poly>> image;
  Poly out;
  for (const auto& [m, c] : terms_) {
    Poly product(c);
    Monomial kept;
    for (const auto& [a, e] : m.factors()) {
      auto it = image.find(a);
      if (it == image.end()) it = image.emplace(a, f(a)).first;
      if (!it->second) {
        kept = kept * Monomial(a, e);
        continue;
      }
      auto key = std::make_pair(a, e);
      auto pit = power_cache.find(key);
      if (pit == power_cache.end()) pit = power_cache.emplace(key, it->second->pow(e)).first;
      product *= pit->second;
    }
    product *= Poly::term(kept, 1);
    out += product;
  }
  return out;
}

Poly Poly::substitute(const Atom& target, const Poly& replacement) const {
  return substitute([&](const Atom& a) -> std::optional<Poly> {
    if (a == target) return replacement;
    return std::nullopt;
  });
}

Poly Poly::partial(const Atom& a) const {
  Poly out;
  for (const auto& [m, c] : terms_) {
    const int e = m.exponent(a);
    if (e == 0) continue;
    out.add_term(m.with_exponent(a, e - 1), c * e);
  }
  return out;
}

Poly Poly::filter(const std::function<bool(const Monomial&)>& keep) const {
  Poly out;
  for (const auto& [m, c] : terms_)
    if (keep(m)) out.add_term(m, c);
  return out;
}

Poly make_poly(std::initializer_list<std::pair<Rational, Monomial>> terms) {
  Poly p;
  for (const auto& [c, m] : terms) p += Poly::term(m, c);
  return p;
}

std::string rational_to_string(const Rational& r) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

std::string to_string(const Monomial& m) {
  std::string out;
  for (const auto& [a, e] : m.factors()) {
    if (!out.empty()) out += ' ';
    out += atom_name(a);
    if (e != 1) out += fmt::format("^{}", e);
  }
  return out;
}

std::string to_string(const Poly& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    const bool negative = c < 0;
    const Rational mag = negative ? Rational(-c) : c;
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    if (m.is_one()) {
      out += rational_to_string(mag);
    } else if (mag == 1) {
      out += to_string(m);
    } else {
      out += rational_to_string(mag) + " " + to_string(m);
    }
  }
  return out;
}

double to_double(const Rational& r) {
  using boost::multiprecision::cpp_int;
  const cpp_int num = boost::multiprecision::numerator(r);
  const cpp_int den = boost::multiprecision::denominator(r);
  const cpp_int limit = cpp_int(1) << 53;
  if (abs(num) <= limit && den <= limit)
    return num.convert_to<double>() / den.convert_to<double>();
  return r.convert_to<double>();
}

Rational to_rational(double x) {
  if (!std::isfinite(x)) throw NumericalFailure("cannot convert a non-finite value to a rational");
  if (x == 0.0) return Rational(0);
  // Continued-fraction convergents with small denominators first.
  {
    using boost::multiprecision::cpp_int;
    double rest = std::abs(x);
    cpp_int h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    for (int it = 0; it < 40; ++it) {
      const double fl = std::floor(rest);
      if (fl > 1e15) break;
      const cpp_int a = static_cast<long long>(fl);
      const cpp_int h2 = a * h1 + h0;
      const cpp_int k2 = a * k1 + k0;
      if (k2 > cpp_int(1000000000)) break;
      h0 = h1;
      h1 = h2;
      k0 = k1;
      k1 = k2;
      Rational candidate(h1, k1);
      if (x < 0) candidate = -candidate;
      if (to_double(candidate) == x) return candidate;
      const double frac = rest - fl;
      if (frac == 0.0) break;
      rest = 1.0 / frac;
    }
  }
  int exp2 = 0;
  const double mant = std::frexp(x, &exp2);
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rational r(scaled);
  const int shift = exp2 - 53;
  using boost::multiprecision::cpp_int;
  if (shift >= 0) {
    r *= Rational(cpp_int(1) << shift);
  } else {
    r /= Rational(cpp_int(1) << (-shift));
  }
  return r;
}

CompiledPoly::CompiledPoly(const Poly& p, const SlotOf& slot_of) {
  terms_.reserve(p.size());
  for (const auto& [m, c] : p.terms()) {
    Term t{to_double(c), {}, {}};
    for (const auto& [a, e] : m.factors()) {
      const int slot = slot_of(a);
      if (slot < 0)
        throw UnsupportedError(fmt::format("no numeric binding for symbol '{}'", atom_name(a)));
      t.factors.emplace_back(slot, e);
    }
    t.text = to_string(Poly::term(m, c));
    terms_.push_back(std::move(t));
  }
}

double CompiledPoly::eval_term(const Term& t, const double* slots) noexcept {
  double v = t.coefficient;
  for (const auto& [slot, e] : t.factors) {
    const double base = slots[slot];
    double f = base;
    for (int k = 1; k < e; ++k) f *= base;
    v *= f;
  }
  return v;
}

double CompiledPoly::evaluate(const double* slots) const noexcept {
  double sum = 0.0;
  for (const auto& t : terms_) sum += eval_term(t, slots);
  return sum;
}

double CompiledPoly::evaluate_checked(const double* slots, const char* what) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    const double v = eval_term(t, slots);
    if (!std::isfinite(v))
      throw NumericalFailure(fmt::format("non-finite value in {} from term '{}'", what, t.text));
    sum += v;
  }
  if (!std::isfinite(sum))
    throw NumericalFailure(fmt::format("non-finite sum in {}", what));
  return sum;
}

}  // namespace qmoment::sym
