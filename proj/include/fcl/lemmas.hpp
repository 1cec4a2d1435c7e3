#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcl/domain.hpp"
#include "fcl/energy.hpp"
#include "fcl/kernel.hpp"

namespace fcl {

/// Explicit constants of the quantitative lemmas, as functions of
/// (n, s, N, Lambda, r0) and the covering constant xi.
struct EstimateConstants {
  int n = 1;
  double s = 0.5;
  int N = 1;
  double Lambda = 0.0;
  double r0 = 1.0;
  double xi = 2.0;

  double ballVolume = 2.0;     // |B| = omega_n
  double ballPerimeter = 2.0;  // P(B) = n omega_n
  double PsB = 8.0;            // fractional perimeter of the unit ball

  double C1 = 0.0, C2 = 0.0;    // truncation
  double chi1 = 0.0, chi2 = 0.0;  // nucleation
  double r1 = 0.0, c0 = 0.0;    // infiltration
  double sigma0 = 0.0;          // default c0 * |B|, overridable
  double C0 = 0.0;              // perimeter growth bound
};

double omega_n(int n);

/// P_s of the unit ball: closed form in 1-D, Richardson-extrapolated
/// quadrature otherwise. errEstimate (optional) receives the self-difference.
double ball_perimeter_s(int n, double s, int resolution = 64,
                        double* errEstimate = nullptr);

EstimateConstants estimate_constants(int n, double s, int N, double Lambda,
                               double r0, double xi = 0.0 /* 0 -> default */);

/// Self-describing outcome of one quantitative check.
struct CheckReport {
  std::string name;
  bool pass = false;
  bool diagnostic = false;  // counterexample probes: failure is informative
  std::map<std::string, double> measured;
  std::map<std::string, double> bounds;
  double tolerance = 0.0;
  std::string context;

  std::string to_json() const;  // one NDJSON line
};

std::string reports_to_csv(const std::vector<CheckReport>& reports);

/// Two-set sandwich and the L-set union lower bound with certified discrete
/// dist/diam for every pairwise-disjoint family.
CheckReport check_sandwich(const std::vector<Mask>& sets,
                           const KernelTensor& k);

/// P_s(E) >= Ps(B) |B|^{(s-n)/n} |E|^{(n-s)/n}, with documented slack.
CheckReport check_isoperimetric(const Mask& E, const KernelTensor& k,
                                double PsB, double tol = 1e-6);

/// Two-sided volume density and local perimeter growth at a boundary cell.
CheckReport check_density(const LabelGrid& g, int cell,
                          const std::vector<double>& radii,
                          const EstimateConstants& pc, double c0, double c1);

/// Scan of (cell, radius <= r1) pairs: a chamber with ball volume below
/// sigma0 r^n must vanish in the half ball (one rasterization layer slack).
CheckReport check_infiltration(const LabelGrid& g, const EstimateConstants& pc,
                               const std::vector<double>& radii,
                               const KernelTensor& k);

/// Greedy unit-ball selection capturing all but eps of |E|.
struct NucleationResult {
  std::vector<std::array<double, 3>> points;
  double residual = 0.0;
  double densityThreshold = 0.0;
  double cardinalityBound = 0.0;
};
NucleationResult nucleate(const Mask& E, double eps, const KernelTensor& k,
                          const EstimateConstants& pc);

/// Smallest radius in [0, C1 tau^{1/n}] whose distance-level truncation
/// satisfies the perimeter-drop certificate; degenerate branch when nothing
/// lies beyond the scan radius.
struct TruncationResult {
  double r0 = 0.0;
  LabelGrid truncated;
  bool degenerate = false;
  double lhs = 0.0, rhs = 0.0;  // certificate sides
};
TruncationResult truncate_cluster(const LabelGrid& g, const Mask& F,
                                  double tau, const KernelTensor& k,
                                  const EstimateConstants& pc);

/// Random ball-supported perturbations versus the almost-minimality
/// inequality; reports minimal slack and the empirical smallest Lambda.
CheckReport local_stability(const LabelGrid& g, double Lambda, double r0,
                            int trials, std::uint64_t seed,
                            const KernelTensor& k);

struct BlowupScale {
  double r = 0.0;
  double occupancy = 0.0;  // top-two chamber fraction of the ball
  double flatness = 0.0;   // max boundary distance to fitted plane, / r
  int chamberA = 0, chamberB = 0;
};
struct BlowupReport {
  std::array<double, 3> center{0, 0, 0};
  std::vector<BlowupScale> scales;
  std::string classification;  // regular-like | singular-like | inconclusive
};
BlowupReport blowup(const LabelGrid& g, int cell,
                    const std::vector<double>& scales);

}  // namespace fcl
