#pragma once

// Split-operator Schrodinger reference on a periodic uniform grid.

#include <complex>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/model.hpp"
#include "qmoment/oracle_kernels.hpp"

namespace qmoment::oracle {

struct Grid {
  double x_min = -20.0;
  double x_max = 20.0;
  std::size_t n = 2048;

  double dx() const noexcept { return (x_max - x_min) / static_cast<double>(n); }
  double x(std::size_t i) const noexcept { return x_min + static_cast<double>(i) * dx(); }
  std::vector<double> positions() const;
  /// Angular wavenumbers in FFT order.
  std::vector<double> wavenumbers() const;
  /// Throws ConstructionError unless n is a power of two >= 256 and x_max > x_min.
  void validate() const;

  bool operator==(const Grid&) const = default;
};

struct WavefunctionState {
  Grid grid;
  std::vector<cplx> psi;
  double t = 0.0;
  double hbar = 1.0;

  double norm() const;  // sum |psi|^2 dx
};

/// The packet sampled on the grid and renormalized to unit discrete norm.
WavefunctionState gaussian_state(const Grid& grid, const GaussianPacket& packet);

struct Moments {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var = 0.0;
  double var_rate = 0.0;  // <xp + px> - 2 <x><p>
  double skew = 0.0;      // <(x - <x>)^3>
  double kurt = 0.0;      // <(x - <x>)^4>
  double p2 = 0.0;        // <p^2>
  double mean_h = 0.0;
  double norm = 0.0;
};

Moments extract_moments(const WavefunctionState& psi, const PolynomialPotential& pot, Exec exec = Exec::Parallel);

struct OracleControl {
  double dt = 1e-3;
  double sample_interval = 0.01;  // a whole number of steps
  double edge_tol = 1e-12;        // max |psi| allowed in the outer edge band
  double norm_tol = 1e-8;
  std::size_t edge_width = 0;     // 0 means n / 64
  Exec exec = Exec::Parallel;

  void validate() const;
};

enum class OracleStatus { Completed, Leakage, NormDrift };
std::string_view to_string(OracleStatus s);

struct OracleSample {
  double t = 0.0;
  Moments m;
  double norm_err = 0.0;  // norm(t) - norm(0)
};

struct OracleRecord {
  std::vector<OracleSample> samples;
  OracleStatus status = OracleStatus::Completed;
  std::string message;
  long steps = 0;
  double wall_seconds = 0.0;
  WavefunctionState final_state;

  bool completed() const noexcept { return status == OracleStatus::Completed; }
  std::vector<double> times() const;
  std::vector<double> channel(double Moments::*member) const;
};

/// Strang splitting: half kinetic, full potential at the step midpoint, half
/// kinetic, with adjacent half kinetic steps merged between samples. Leakage
/// and norm drift end the run with the status set; the record keeps what was
/// sampled.
OracleRecord evolve(const WavefunctionState& psi0, const PolynomialPotential& pot, double t_end,
                    const OracleControl& control = {});

std::vector<OracleRecord> evolve_many(const std::vector<WavefunctionState>& starts, const PolynomialPotential& pot,
                                      double t_end, const OracleControl& control = {});

struct ClosureEstimate {
  double beta = 0.0;    // mean K / (3 V^2)
  double beta1 = 0.0;   // least squares S ~ beta1 <x> + beta2 <x>^3
  double beta2 = 0.0;
  bool skew_fit = false;  // false when <x> stays too small to fit
};

ClosureEstimate estimate_closure(const OracleRecord& rec);

/// `t,x_mean,p_mean,var,skew,kurt,h_mean,norm_err`
void write_oracle_csv(std::ostream& os, const OracleRecord& rec);

}  // namespace qmoment::oracle
