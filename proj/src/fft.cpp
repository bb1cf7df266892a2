#include "qmoment/fft.hpp"

#include <cmath>
#include <numbers>

#include "qmoment/error.hpp"

namespace qmoment {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

Fft::Fft(std::size_t n) : n_(n), bitrev_(n), twiddle_(n / 2) {
  if (!is_power_of_two(n) || n < 2) throw ConstructionError("FFT size must be a power of two >= 2");
  int bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    bitrev_[i] = r;
  }
  for (std::size_t k = 0; k < n / 2; ++k)
    twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
}

void Fft::run(std::complex<double>* a, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i)
    if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
  // explicit real arithmetic; std::complex operator* goes through __muldc3
  auto* d = reinterpret_cast<double*>(a);
  const auto* tw = reinterpret_cast<const double*>(twiddle_.data());
  const double sign = inverse ? -1.0 : 1.0;
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = tw[2 * j * stride];
        const double wi = sign * tw[2 * j * stride + 1];
        double* u = d + 2 * (start + j);
        double* v = d + 2 * (start + j + half);
        const double vr = v[0] * wr - v[1] * wi;
        const double vi = v[0] * wi + v[1] * wr;
        v[0] = u[0] - vr;
        v[1] = u[1] - vi;
        u[0] += vr;
        u[1] += vi;
      }
    }
  }
}

void Fft::forward(std::complex<double>* data) const { run(data, false); }

void Fft::inverse(std::complex<double>* data) const {
  run(data, true);
  const double s = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) data[i] *= s;
}

std::vector<std::complex<double>> direct_dft(const std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jk = (j * k) % n;
      s += x[j] * std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(jk) / static_cast<double>(n));
    }
    out[k] = inverse ? s / static_cast<double>(n) : s;
  }
  return out;
}

}  // namespace qmoment
