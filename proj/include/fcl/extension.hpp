#pragma once

#include <array>
#include <string>
#include <vector>

#include "fcl/domain.hpp"
#include "fcl/lemmas.hpp"

namespace fcl {

/// Weighted half-space extension of a +/-1 trace, sampled on z-levels.
struct ExtensionField {
  DomainSpec domain;
  double a = 0.5;  // weight exponent, a = 1 - s
  std::vector<double> zLevels;
  std::vector<double> trace;                // +1 inside, -1 outside, per cell
  std::vector<std::vector<double>> values;  // [level][cell]
  double kernelMass = 0.0;  // continuum mass of the unnormalized kernel
};

/// Geometric z-levels (ratio ~1.15) from cellSize/4 to L/2, at least 16.
std::vector<double> default_z_levels(const DomainSpec& d);

/// Convolution of the +/-1 indicator trace of E with the per-level
/// renormalized Poisson kernel. exteriorTrace is the value carried by the
/// complement of the box in free mode (-1 for a bounded set, +1 for the
/// unbounded chamber).
ExtensionField poisson_extend(const Mask& E, const DomainSpec& d,
                              const std::vector<double>& zLevels,
                              double exteriorTrace = -1.0);

/// One extension per chamber h = 0..N; in free mode chamber 0 continues
/// with trace +1 outside the box.
std::vector<ExtensionField> poisson_extend(const LabelGrid& g,
                                           const std::vector<double>& zLevels);

/// Extension of the axis-aligned half-space {x_axis > c}, continued outside
/// the box. Transverse translation invariance reduces the convolution to the
/// one-dimensional kernel marginal, evaluated per column.
ExtensionField poisson_extend_halfspace(const DomainSpec& d, int axis,
                                        double c,
                                        const std::vector<double>& zLevels);

/// Weighted Dirichlet energy over the full slab.
double dirichlet_energy(const ExtensionField& f);

/// Weighted Dirichlet energy over the half-ball U_r^+ centered at (x0, 0).
double dirichlet_energy(const ExtensionField& f,
                        const std::array<double, 3>& x0, double r);

struct PhiProfile {
  std::array<double, 3> center{0, 0, 0};
  double s = 0.5;
  std::vector<double> radii;
  std::vector<double> phi;
  std::vector<double> errEstimate;  // per-radius coarse/fine self-difference
  double lambdaPrime = 0.0;         // smallest monotone-making candidate

  std::string to_csv() const;
};

/// Phi(r) = r^{-(n-s)} sum_h energy of the chamber extensions over U_r^+.
PhiProfile phi_profile(const LabelGrid& g, int cell,
                       const std::vector<double>& radii);

/// Same from precomputed fields and an explicit center on the interface.
PhiProfile phi_profile(const std::vector<ExtensionField>& fields,
                       const std::array<double, 3>& center,
                       const std::vector<double>& radii);

/// Passes iff Phi(r) + lambdaPrime r^s is nondecreasing up to the per-radius
/// error estimates; reports the smallest constant achieving monotonicity.
CheckReport check_monotonicity(const PhiProfile& profile, double lambdaPrime);

/// Slab dump in the soft-cluster float format, z-levels on a comment line.
void write_extension_field(const ExtensionField& f, const std::string& path);

}  // namespace fcl
