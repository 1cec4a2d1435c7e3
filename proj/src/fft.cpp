#include "fcl/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <stdexcept>

namespace fcl {

FftGrid::FftGrid(std::array<int, 3> dims, int n) : dims_(dims), rank_(n) {
  if (n < 1 || n > 3) throw std::invalid_argument("FftGrid: rank must be 1..3");
  total_ = 1;
  for (int a = 0; a < n; ++a) total_ *= dims[a];
  long long last = dims[n - 1];
  complexCount_ = (total_ / last) * (last / 2 + 1);
  real_ = fftw_alloc_real(total_);
  complex_ = fftw_alloc_complex(complexCount_);
  if (!real_ || !complex_) throw std::bad_alloc();
  int nd[3] = {dims[0], dims[1], dims[2]};
  planFwd_ = fftw_plan_dft_r2c(n, nd, real_,
                               static_cast<fftw_complex*>(complex_),
                               FFTW_ESTIMATE);
  planBwd_ = fftw_plan_dft_c2r(n, nd, static_cast<fftw_complex*>(complex_),
                               real_, FFTW_ESTIMATE);
  if (!planFwd_ || !planBwd_) throw std::runtime_error("FftGrid: plan failure");
}

FftGrid::~FftGrid() {
  fftw_destroy_plan(static_cast<fftw_plan>(planFwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(planBwd_));
  fftw_free(real_);
  fftw_free(complex_);
}

std::vector<std::complex<double>> FftGrid::forward(
    const std::vector<double>& field) {
  if ((long long)field.size() != total_)
    throw std::invalid_argument("FftGrid::forward: size mismatch");
  std::memcpy(real_, field.data(), total_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(planFwd_));
  std::vector<std::complex<double>> out(complexCount_);
  std::memcpy(out.data(), complex_, complexCount_ * sizeof(fftw_complex));
  return out;
}

std::vector<double> FftGrid::inverse(
    const std::vector<std::complex<double>>& spec) {
  if ((long long)spec.size() != complexCount_)
    throw std::invalid_argument("FftGrid::inverse: size mismatch");
  std::memcpy(complex_, spec.data(), complexCount_ * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(planBwd_));
  std::vector<double> out(total_);
  double inv = 1.0 / (double)total_;
  for (long long i = 0; i < total_; ++i) out[i] = real_[i] * inv;
  return out;
}

}  // namespace fcl
