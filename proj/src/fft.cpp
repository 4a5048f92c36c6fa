#include "emoreg/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <utility>

#include "emoreg/error.hpp"

namespace emoreg {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw Error(ErrorCode::input_too_short, "FFT length must be positive");
  in_ = fftw_alloc_real(n);
  out_ = fftw_alloc_complex(n / 2 + 1);
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, static_cast<fftw_complex*>(out_),
                               FFTW_ESTIMATE);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : n_(std::exchange(other.n_, 0)),
      in_(std::exchange(other.in_, nullptr)),
      out_(std::exchange(other.out_, nullptr)),
      plan_(std::exchange(other.plan_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    n_ = std::exchange(other.n_, 0);
    in_ = std::exchange(other.in_, nullptr);
    out_ = std::exchange(other.out_, nullptr);
    plan_ = std::exchange(other.plan_, nullptr);
  }
  return *this;
}

void RealFft::release() noexcept {
  if (plan_ != nullptr) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  if (in_ != nullptr) fftw_free(in_);
  if (out_ != nullptr) fftw_free(out_);
  plan_ = nullptr;
  in_ = nullptr;
  out_ = nullptr;
}

void RealFft::forward(std::span<const double> input, std::vector<std::complex<double>>& out) {
  if (input.size() != n_) throw Error(ErrorCode::dimension_mismatch, "FFT input length mismatch");
  std::copy(input.begin(), input.end(), in_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* c = static_cast<const fftw_complex*>(out_);
  out.resize(bins());
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {c[k][0], c[k][1]};
}

void RealFft::power(std::span<const double> input, std::vector<double>& out) {
  if (input.size() != n_) throw Error(ErrorCode::dimension_mismatch, "FFT input length mismatch");
  std::copy(input.begin(), input.end(), in_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* c = static_cast<const fftw_complex*>(out_);
  out.resize(bins());
  for (std::size_t k = 0; k < bins(); ++k) out[k] = c[k][0] * c[k][0] + c[k][1] * c[k][1];
}

}  // namespace emoreg
