#include "qmoment/oracle_kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace qmoment::oracle {

namespace {

std::size_t chunk_begin(int c, std::size_t n) {
  return n * static_cast<std::size_t>(c) / kReductionChunks;
}

// Runs body(c, lo, hi) for every chunk and sums the chunk results in order.
template <class T, class Body>
T chunked(std::size_t n, Exec exec, Body&& body) {
  std::array<T, kReductionChunks> part{};
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < kReductionChunks; ++c) part[c] = body(chunk_begin(c, n), chunk_begin(c + 1, n));
  } else {
    for (int c = 0; c < kReductionChunks; ++c) part[c] = body(chunk_begin(c, n), chunk_begin(c + 1, n));
  }
  T total{};
  for (const T& p : part) total += p;
  return total;
}

// std::complex operator* goes through __muldc3 without -ffast-math
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

MomentSums& operator+=(MomentSums& a, const MomentSums& b) {
  a.w += b.w;
  a.d1 += b.d1;
  a.d2 += b.d2;
  a.d3 += b.d3;
  a.d4 += b.d4;
  return a;
}

}  // namespace

void multiply(cplx* psi, const cplx* phase, std::size_t n, Exec exec) {
  const long m = static_cast<long>(n);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) psi[i] = mul(psi[i], phase[i]);
  } else {
    for (long i = 0; i < m; ++i) psi[i] = mul(psi[i], phase[i]);
  }
}

void multiply_drive(cplx* psi, const cplx* base, const double* x, double c, std::size_t n, Exec exec) {
  const long m = static_cast<long>(n);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) psi[i] = mul(psi[i], mul(base[i], std::polar(1.0, -c * x[i])));
  } else {
    for (long i = 0; i < m; ++i) psi[i] = mul(psi[i], mul(base[i], std::polar(1.0, -c * x[i])));
  }
}

MomentSums moment_sums(const cplx* psi, const double* q, double shift, std::size_t n, Exec exec) {
  return chunked<MomentSums>(n, exec, [&](std::size_t lo, std::size_t hi) {
    MomentSums s;
    for (std::size_t i = lo; i < hi; ++i) {
      const double w = std::norm(psi[i]);
      const double d = q[i] - shift;
      const double d2 = d * d;
      s.w += w;
      s.d1 += w * d;
      s.d2 += w * d2;
      s.d3 += w * d2 * d;
      s.d4 += w * d2 * d2;
    }
    return s;
  });
}

double weighted_sum(const cplx* psi, const double* f, std::size_t n, Exec exec) {
  return chunked<double>(n, exec, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += std::norm(psi[i]) * f[i];
    return s;
  });
}

double cross_sum(const cplx* a, const cplx* b, const double* q, std::size_t n, Exec exec) {
  return chunked<double>(n, exec, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += (std::conj(a[i]) * b[i]).real() * q[i];
    return s;
  });
}

double edge_amplitude(const cplx* psi, std::size_t n, std::size_t width) {
  width = std::min(width, n / 2);
  double m = 0.0;
  for (std::size_t i = 0; i < width; ++i) m = std::max({m, std::abs(psi[i]), std::abs(psi[n - 1 - i])});
  return m;
}

}  // namespace qmoment::oracle
