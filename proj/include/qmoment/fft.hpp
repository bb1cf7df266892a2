#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qmoment {

/// In-place iterative radix-2 transform for one fixed power-of-two size.
/// forward: X_k = sum_j x_j exp(-2 pi i jk/n); inverse includes the 1/n.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void forward(std::complex<double>* data) const;
  void inverse(std::complex<double>* data) const;

 private:
  void run(std::complex<double>* data, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;  // exp(-2 pi i k/n), k < n/2
};

/// O(n^2) reference transform with the same sign and scaling conventions.
std::vector<std::complex<double>> direct_dft(const std::vector<std::complex<double>>& x, bool inverse = false);

bool is_power_of_two(std::size_t n) noexcept;

}  // namespace qmoment
