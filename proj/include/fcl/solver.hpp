#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcl/domain.hpp"
#include "fcl/energy.hpp"
#include "fcl/kernel.hpp"

namespace fcl {

struct AnnealSchedule {
  long long iters = 0;
  double t0 = 0.0;  // initial temperature; t0 = 0 means strict descent
  double t1 = 0.0;  // final temperature (geometric interpolation)
};

struct SolveConfig {
  int N = 1;
  VolumeVector targets;
  SeedDescriptor init;
  std::uint64_t seed = 0;
  int maxIters = 200;
  double energyTol = 1e-10;    // stop when accepted decrease falls below
  double repairBudget = 0.05;  // allowed per-chamber volume error fraction
  double repairC = 50.0;       // diagnostic constant for the repair bound
  AnnealSchedule anneal;       // iters = 0 disables
  bool doBinarize = true;
  bool doRepair = true;
  bool doPolish = true;
};

struct TracePoint {
  int iter;
  double energy;
  double residual;
  double step;
};

struct SolveResult {
  LabelGrid grid;
  SoftCluster soft;
  std::vector<TracePoint> trace;
  VolumeVector achieved;
  double finalEnergy = 0.0;       // cluster_perimeter total of grid
  double repairDeltaE = 0.0;
  bool repairBoundHolds = true;
  double wallSeconds = 0.0;
  std::string termination;
};

/// Alternating projection onto {0 <= u_h, sum_h u_h <= 1 per cell,
/// cellVolume * sum_i u_h(i) = m_h}; free mode keeps the outer layer empty.
SoftCluster project_constraints(const SoftCluster& sc, const VolumeVector& m);

SolveResult minimize(const SolveConfig& cfg, const KernelTensor& k);

/// Cellwise argmax over {u_0 = 1 - sum u_h, u_1, ..., u_N}; ties to the
/// lowest chamber index.
LabelGrid binarize(const SoftCluster& sc);

/// Greedy cheapest interface relabels until cell-count volumes match targets
/// exactly. Returns the repaired grid; deltaE/boundHolds report the cost.
LabelGrid repair_volumes(const LabelGrid& g, const VolumeVector& m,
                         const KernelTensor& k, double budget, double C,
                         double* deltaE = nullptr, bool* boundHolds = nullptr);

/// Volume-preserving pair-swap Metropolis refinement; deterministic per seed.
LabelGrid anneal(const LabelGrid& g, const VolumeVector& m,
                 const KernelTensor& k, const AnnealSchedule& sched,
                 std::uint64_t seed);

/// Strict-descent pair-swap polish until no improving swap remains among
/// boundary-cell pairs.
LabelGrid polish_swaps(const LabelGrid& g, const KernelTensor& k);

/// Exact enumeration for tiny instances (<= 1e7 labelings, N <= 2).
LabelGrid exhaustive_min(const DomainSpec& d, const VolumeVector& m,
                         const KernelTensor& k);

}  // namespace fcl
