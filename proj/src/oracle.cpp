#include "qmoment/oracle.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fmt/format.h>
#include <numbers>
#include <ostream>

#include "qmoment/dynamics.hpp"
#include "qmoment/error.hpp"
#include "qmoment/fft.hpp"

namespace qmoment::oracle {

std::vector<double> Grid::positions() const {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = this->x(i);
  return x;
}

std::vector<double> Grid::wavenumbers() const {
  std::vector<double> k(n);
  const double dk = 2 * std::numbers::pi / (static_cast<double>(n) * dx());
  for (std::size_t j = 0; j < n; ++j) {
    const double m = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    k[j] = m * dk;
  }
  return k;
}

void Grid::validate() const {
  if (!is_power_of_two(n) || n < 256) throw ConstructionError(fmt::format("grid size {} must be a power of two >= 256", n));
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
    throw ConstructionError("grid needs finite x_min < x_max");
}

double WavefunctionState::norm() const {
  double s = 0.0;
  for (const auto& z : psi) s += std::norm(z);
  return s * grid.dx();
}

WavefunctionState gaussian_state(const Grid& grid, const GaussianPacket& packet) {
  grid.validate();
  WavefunctionState st;
  st.grid = grid;
  st.hbar = packet.hbar();
  st.psi.resize(grid.n);
  const double d2 = packet.width_sq();
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    const double u = x - packet.center();
    st.psi[i] = std::polar(std::exp(-u * u / (2 * d2)), packet.mean_p() * x / packet.hbar());
  }
  const double s = 1.0 / std::sqrt(st.norm());
  for (auto& z : st.psi) z *= s;
  return st;
}

namespace {

struct Workspace {
  Fft fft;
  std::vector<double> x, k, vx;
  std::vector<cplx> buf, dbuf;

  Workspace(const Grid& g, const PolynomialPotential& pot, double t)
      : fft(g.n), x(g.positions()), k(g.wavenumbers()), vx(g.n), buf(g.n), dbuf(g.n) {
    for (std::size_t i = 0; i < g.n; ++i) vx[i] = pot.value(x[i], t);
  }
};

Moments moments_with(const WavefunctionState& st, const PolynomialPotential& pot, Workspace& ws, Exec exec) {
  const std::size_t n = st.grid.n;
  const double dx = st.grid.dx();
  const double hbar = st.hbar;
  Moments m;
  const MomentSums first = moment_sums(st.psi.data(), ws.x.data(), 0.0, n, exec);
  m.norm = first.w * dx;
  m.mean_x = first.d1 / first.w;
  const MomentSums c = moment_sums(st.psi.data(), ws.x.data(), m.mean_x, n, exec);
  m.var = c.d2 / c.w;
  m.skew = c.d3 / c.w;
  m.kurt = c.d4 / c.w;

  if (pot.driven())
    for (std::size_t i = 0; i < n; ++i) ws.vx[i] = pot.value(ws.x[i], st.t);
  const double mean_v = weighted_sum(st.psi.data(), ws.vx.data(), n, exec) / first.w;

  std::copy(st.psi.begin(), st.psi.end(), ws.buf.begin());
  ws.fft.forward(ws.buf.data());
  const MomentSums ks = moment_sums(ws.buf.data(), ws.k.data(), 0.0, n, exec);
  m.mean_p = hbar * ks.d1 / ks.w;
  m.p2 = hbar * hbar * ks.d2 / ks.w;
  m.mean_h = 0.5 * m.p2 + mean_v;

  // p psi by spectral differentiation; <xp + px> = 2 Re <psi| x p |psi>
  for (std::size_t j = 0; j < n; ++j) ws.dbuf[j] = ws.buf[j] * (hbar * ws.k[j]);
  ws.fft.inverse(ws.dbuf.data());
  const double xp = cross_sum(st.psi.data(), ws.dbuf.data(), ws.x.data(), n, exec) / first.w;
  m.var_rate = 2 * xp - 2 * m.mean_x * m.mean_p;
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

long whole_steps(double span, double dt, const char* what) {
  const double r = span / dt;
  const long k = std::lround(r);
  if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9 * std::max(1.0, r))
    throw ConstructionError(fmt::format("{} {} is not a whole number of steps of {}", what, span, dt));
  return k;
}

}  // namespace

Moments extract_moments(const WavefunctionState& psi, const PolynomialPotential& pot, Exec exec) {
  psi.grid.validate();
  if (psi.psi.size() != psi.grid.n) throw ConstructionError("wavefunction size does not match its grid");
  Workspace ws(psi.grid, pot, psi.t);
  return moments_with(psi, pot, ws, exec);
}

void OracleControl::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConstructionError("oracle dt must be positive");
  if (!(sample_interval > 0.0)) throw ConstructionError("oracle sample interval must be positive");
  whole_steps(sample_interval, dt, "sample interval");
  if (!(edge_tol > 0.0) || !(norm_tol > 0.0)) throw ConstructionError("oracle tolerances must be positive");
}

std::string_view to_string(OracleStatus s) {
  switch (s) {
    case OracleStatus::Completed: return "completed";
    case OracleStatus::Leakage: return "leakage";
    case OracleStatus::NormDrift: return "norm-drift";
  }
  return "?";
}

std::vector<double> OracleRecord::times() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.t);
  return out;
}

std::vector<double> OracleRecord::channel(double Moments::*member) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.m.*member);
  return out;
}

OracleRecord evolve(const WavefunctionState& psi0, const PolynomialPotential& pot, double t_end,
                    const OracleControl& c) {
  c.validate();
  psi0.grid.validate();
  if (psi0.psi.size() != psi0.grid.n) throw ConstructionError("wavefunction size does not match its grid");
  if (!(t_end > psi0.t)) throw ConstructionError("t_end must exceed the start time");
  const auto start = std::chrono::steady_clock::now();
  const long total = whole_steps(t_end - psi0.t, c.dt, "horizon");
  const long per_sample = whole_steps(c.sample_interval, c.dt, "sample interval");

  const Grid& g = psi0.grid;
  const std::size_t n = g.n;
  const double hbar = psi0.hbar;
  const std::size_t edge = c.edge_width ? c.edge_width : n / 64;
  Workspace ws(g, pot, psi0.t);

  std::vector<cplx> kin_half(n), kin_full(n), pot_phase(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double e = 0.5 * hbar * ws.k[j] * ws.k[j];  // hbar^2 k^2 / 2 over hbar
    kin_half[j] = std::polar(1.0, -e * 0.5 * c.dt);
    kin_full[j] = std::polar(1.0, -e * c.dt);
  }
  const PolynomialPotential still(pot.c2(), pot.c4());
  for (std::size_t i = 0; i < n; ++i) pot_phase[i] = std::polar(1.0, -still.value(ws.x[i], 0.0) * c.dt / hbar);

  OracleRecord rec;
  WavefunctionState st = psi0;
  const double norm0 = st.norm();

  // false stops the run
  auto record = [&]() {
    OracleSample s;
    s.t = st.t;
    s.m = moments_with(st, pot, ws, c.exec);
    s.norm_err = s.m.norm - norm0;
    rec.samples.push_back(s);
    const double leak = edge_amplitude(st.psi.data(), n, edge);
    if (leak > c.edge_tol) {
      rec.status = OracleStatus::Leakage;
      rec.message = fmt::format("|psi| = {:.3g} at the grid edge at t = {:.10g}; enlarge the box", leak, st.t);
      return false;
    }
    if (std::abs(s.norm_err) > c.norm_tol) {
      rec.status = OracleStatus::NormDrift;
      rec.message = fmt::format("norm drifted by {:.3g} at t = {:.10g}", s.norm_err, st.t);
      return false;
    }
    return true;
  };

  bool ok = record();
  long done = 0;
  while (ok && done < total) {
    const long block = std::min(per_sample, total - done);
    cplx* psi = st.psi.data();
    ws.fft.forward(psi);
    multiply(psi, kin_half.data(), n, c.exec);
    for (long s = 0; s < block; ++s) {
      const double t_mid = psi0.t + (static_cast<double>(done + s) + 0.5) * c.dt;
      ws.fft.inverse(psi);
      if (pot.driven())
        multiply_drive(psi, pot_phase.data(), ws.x.data(),
                       pot.drive_g() * std::cos(pot.drive_omega() * t_mid) * c.dt / hbar, n, c.exec);
      else
        multiply(psi, pot_phase.data(), n, c.exec);
      ws.fft.forward(psi);
      multiply(psi, s + 1 == block ? kin_half.data() : kin_full.data(), n, c.exec);
    }
    ws.fft.inverse(psi);
    done += block;
    st.t = psi0.t + static_cast<double>(done) * c.dt;
    ok = record();
  }
  rec.steps = done;
  rec.final_state = std::move(st);
  rec.wall_seconds = seconds_since(start);
  return rec;
}

std::vector<OracleRecord> evolve_many(const std::vector<WavefunctionState>& starts, const PolynomialPotential& pot,
                                      double t_end, const OracleControl& control) {
  std::vector<OracleRecord> out(starts.size());
  std::exception_ptr failure;
  OracleControl inner = control;
  inner.exec = Exec::Serial;  // parallel over runs instead
  const long n = static_cast<long>(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = evolve(starts[i], pot, t_end, inner);
    } catch (...) {
#pragma omp critical(qmoment_evolve_many)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ClosureEstimate estimate_closure(const OracleRecord& rec) {
  if (rec.samples.empty()) throw ConstructionError("closure estimate needs samples");
  ClosureEstimate est;
  double ratio = 0.0;
  // normal equations for S = b1 m + b2 m^3
  double a11 = 0, a12 = 0, a22 = 0, r1 = 0, r2 = 0, mmax = 0;
  for (const auto& s : rec.samples) {
    ratio += s.m.kurt / (3 * s.m.var * s.m.var);
    const double m = s.m.mean_x, m3 = m * m * m;
    a11 += m * m;
    a12 += m * m3;
    a22 += m3 * m3;
    r1 += m * s.m.skew;
    r2 += m3 * s.m.skew;
    mmax = std::max(mmax, std::abs(m));
  }
  est.beta = ratio / static_cast<double>(rec.samples.size());
  const double det = a11 * a22 - a12 * a12;
  if (mmax > 1e-6 && std::abs(det) > 1e-14 * a11 * a22) {
    est.skew_fit = true;
    est.beta1 = (r1 * a22 - r2 * a12) / det;
    est.beta2 = (a11 * r2 - a12 * r1) / det;
  } else if (mmax > 1e-6) {
    est.skew_fit = true;
    est.beta1 = r1 / a11;
  }
  return est;
}

void write_oracle_csv(std::ostream& os, const OracleRecord& rec) {
  os << "t,x_mean,p_mean,var,skew,kurt,h_mean,norm_err\n";
  for (const auto& s : rec.samples) {
    os << format_number(s.t) << ',' << format_number(s.m.mean_x) << ',' << format_number(s.m.mean_p) << ','
       << format_number(s.m.var) << ',' << format_number(s.m.skew) << ',' << format_number(s.m.kurt) << ','
       << format_number(s.m.mean_h) << ',' << format_number(s.norm_err) << '\n';
  }
}

}  // namespace qmoment::oracle
