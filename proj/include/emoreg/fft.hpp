#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace emoreg {

// Real-input forward DFT of a fixed length, backed by an FFTW plan.
// One instance is not safe for concurrent use; create one per thread.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  // Unnormalized X[k] = sum_t x[t] exp(-2 pi i k t / n) for k in [0, n/2].
  void forward(std::span<const double> input, std::vector<std::complex<double>>& out);

  // |X[k]|^2 for k in [0, n/2].
  void power(std::span<const double> input, std::vector<double>& out);

 private:
  void release() noexcept;

  std::size_t n_ = 0;
  double* in_ = nullptr;
  void* out_ = nullptr;  // fftw_complex*
  void* plan_ = nullptr;  // fftw_plan
};

}  // namespace emoreg
