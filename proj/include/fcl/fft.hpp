#pragma once

#include <array>
#include <complex>
#include <vector>

namespace fcl {

/// Real-to-complex FFT pair on a fixed grid (row-major, first axis slowest).
/// Not thread-safe: each instance owns its transform buffers.
class FftGrid {
 public:
  FftGrid(std::array<int, 3> dims, int n);
  ~FftGrid();
  FftGrid(const FftGrid&) = delete;
  FftGrid& operator=(const FftGrid&) = delete;

  long long size() const { return total_; }
  long long spectrumSize() const { return complexCount_; }

  std::vector<std::complex<double>> forward(const std::vector<double>& field);
  /// Inverse transform, normalized by the grid size.
  std::vector<double> inverse(const std::vector<std::complex<double>>& spec);

 private:
  std::array<int, 3> dims_;
  int rank_;
  long long total_;
  long long complexCount_;
  double* real_;
  void* complex_;  // fftw_complex*
  void* planFwd_;
  void* planBwd_;
};

}  // namespace fcl
