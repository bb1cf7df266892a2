#pragma once

// Grid kernels of the split-step oracle, each with a serial and an OpenMP
// path. Reductions split the index range into kReductionChunks fixed chunks
// and combine the chunk sums in order, so both paths give identical bits
// regardless of the thread count.

#include <complex>
#include <cstddef>

namespace qmoment::oracle {

enum class Exec { Serial, Parallel };

constexpr int kReductionChunks = 64;

using cplx = std::complex<double>;

/// psi[i] *= phase[i]
void multiply(cplx* psi, const cplx* phase, std::size_t n, Exec exec);

/// psi[i] *= base[i] * exp(-i c x[i])
void multiply_drive(cplx* psi, const cplx* base, const double* x, double c, std::size_t n, Exec exec);

struct MomentSums {
  double w = 0.0;   // sum |psi|^2
  double d1 = 0.0;  // sum (q - shift) |psi|^2
  double d2 = 0.0;
  double d3 = 0.0;
  double d4 = 0.0;
};

MomentSums moment_sums(const cplx* psi, const double* q, double shift, std::size_t n, Exec exec);

/// sum |psi|^2 f
double weighted_sum(const cplx* psi, const double* f, std::size_t n, Exec exec);

/// sum Re(conj(a) b) q
double cross_sum(const cplx* a, const cplx* b, const double* q, std::size_t n, Exec exec);

/// max |psi| over [0, width) and [n - width, n)
double edge_amplitude(const cplx* psi, std::size_t n, std::size_t width);

}  // namespace qmoment::oracle
