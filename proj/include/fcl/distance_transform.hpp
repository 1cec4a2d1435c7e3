#pragma once

#include <vector>

#include "fcl/domain.hpp"

namespace fcl {

/// Exact Euclidean distance (physical units, cell centers) from every cell to
/// the nearest seed cell. Periodic domains wrap. Seeds empty -> +inf.
std::vector<double> distance_transform(const DomainSpec& d, const Mask& seeds);

}  // namespace fcl
