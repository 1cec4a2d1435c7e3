#pragma once

#include <array>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "fcl/domain.hpp"
#include "fcl/fft.hpp"

namespace fcl {

struct KernelOptions {
  int latticeCutoff = 3;      // periodic image cutoff per axis
  double tailTolerance = 1e-3;  // bound on periodization residual / K
  bool autoRaiseCutoff = true;
};

/// Translation-invariant cell-pair weights K(delta) for the kernel
/// |z|^{-n-s}, plus row sums, free-mode far-field weights and a spectral
/// cache. Immutable after construction apart from the FFT workspace.
struct KernelTensor {
  DomainSpec domain;
  KernelOptions opts;
  std::array<int, 3> convDims{1, 1, 1};
  std::vector<double> Kconv;   // weights on the conv grid, offset-wrapped
  std::vector<double> rowSum;  // per cell: sum over in-box offsets
  std::vector<double> wFar;    // free mode: per-cell far-field weight
  double tailBound = 0.0;      // certified periodization residual (absolute)

  /// K at a cell offset (periodic: torus offset; free: zero outside range).
  double K(const std::array<int, 3>& delta) const;
  /// (K * u)(i) = sum_{j != i} K(i - j) u(j).
  std::vector<double> correlate(const std::vector<double>& field) const;

  std::shared_ptr<FftGrid> fft;  // workspace; not thread-safe
  std::vector<std::complex<double>> Khat;
};

/// Free-space interaction of two cells at integer offset delta (physical
/// units): cellSize^{n-s} * J(delta).
double cell_interaction(const std::array<int, 3>& delta, const DomainSpec& d);

KernelTensor build_kernel(const DomainSpec& d, const KernelOptions& opts = {});

/// Integral of |y - x|^{-n-q} over the complement of [lo,hi], x inside;
/// tan-substituted fixed quadrature (fast, ~1e-12 relative).
double power_outside_box(int n, double q, const std::array<double, 3>& lo,
                         const std::array<double, 3>& hi,
                         const std::array<double, 3>& x);

// FCLK kernel cache files.
void write_kernel_file(const KernelTensor& k, const std::string& path);
KernelTensor read_kernel_file(const std::string& path, const DomainSpec& expect);

}  // namespace fcl
