#pragma once

#include <string>
#include <vector>

#include "fcl/domain.hpp"
#include "fcl/kernel.hpp"

namespace fcl {

/// Per-chamber perimeters (h = 0..N), their half-sum, and the pairwise
/// interaction matrix.
struct EnergyBreakdown {
  std::vector<double> perChamber;
  double total = 0.0;
  std::vector<std::vector<double>> pairwise;  // (N+1)x(N+1), diagonal 0

  std::string to_json() const;
  std::string to_csv() const;
};

/// I_s(E, F) for disjoint cell masks (far field excluded: both lie in box).
double interaction(const Mask& E, const Mask& F, const KernelTensor& k);

/// P_s(E) = I_s(E, E^c); E^c includes the far field in free mode.
double perimeter(const Mask& E, const KernelTensor& k);

/// Relative perimeter P_s(E; Omega): the three interaction terms seen by the
/// open cell set Omega.
double relative_perimeter(const Mask& E, const Mask& omega,
                          const KernelTensor& k);

EnergyBreakdown cluster_perimeter(const LabelGrid& g, const KernelTensor& k);

/// (1/2) sum_h P_s(E(h); Omega) over h = 0..N.
double cluster_relative_perimeter(const LabelGrid& g, const Mask& omega,
                                  const KernelTensor& k);

/// v_E(i) = sum_{j != i} K(i - j) 1_E(j).
std::vector<double> potential(const Mask& E, const KernelTensor& k);

/// Relaxed cluster energy: (1/2) sum_{h=0}^N J(u_h) with
/// J(u) = sum_i u_i (d_i u_i - (K*u)_i), plus the free-mode far term.
double soft_energy(const SoftCluster& sc, const KernelTensor& k);

/// Gradient with respect to u_h (h = 1..N), eliminating u_0 = 1 - sum u_h.
std::vector<std::vector<double>> soft_gradient(const SoftCluster& sc,
                                               const KernelTensor& k);

}  // namespace fcl
