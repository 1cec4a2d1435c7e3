#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fcl {

enum class Mode { Periodic, Free };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& name);

/// Uniform Cartesian grid on a cube [0,L]^n with a fractional order s.
/// Sets are unions of closed grid cells; all lengths are physical.
struct DomainSpec {
  int n = 1;
  std::array<int, 3> dims{1, 1, 1};  // trailing axes of unused dimensions are 1
  double L = 1.0;
  double cellSize = 1.0;
  Mode mode = Mode::Periodic;
  double s = 0.5;

  int cells() const { return dims[0] * dims[1] * dims[2]; }
  double cellVolume() const;

  // Row-major, first axis slowest.
  int index(const std::array<int, 3>& c) const {
    return (c[0] * dims[1] + c[1]) * dims[2] + c[2];
  }
  std::array<int, 3> coords(int idx) const {
    std::array<int, 3> c;
    c[2] = idx % dims[2];
    idx /= dims[2];
    c[1] = idx % dims[1];
    c[0] = idx / dims[1];
    return c;
  }
  /// Physical center of a cell.
  std::array<double, 3> center(int idx) const {
    auto c = coords(idx);
    std::array<double, 3> x{0, 0, 0};
    for (int a = 0; a < n; ++a) x[a] = (c[a] + 0.5) * cellSize;
    return x;
  }
  /// True if the cell touches the boundary of the box.
  bool onOuterLayer(int idx) const {
    auto c = coords(idx);
    for (int a = 0; a < n; ++a)
      if (c[a] == 0 || c[a] == dims[a] - 1) return true;
    return false;
  }
  bool operator==(const DomainSpec& o) const;
};

DomainSpec make_domain(int n, const std::vector<int>& dims, double L, Mode mode,
                       double s);

/// Hard-labeled cluster: label 0 is the exterior chamber.
struct LabelGrid {
  DomainSpec domain;
  int N = 1;
  std::vector<std::uint8_t> labels;
};

/// Relaxed cluster: one [0,1] field per chamber 1..N; u_0 = 1 - sum u_h.
struct SoftCluster {
  DomainSpec domain;
  int N = 1;
  std::vector<std::vector<double>> fields;  // fields[h-1] for chamber h
};

using VolumeVector = std::vector<double>;
using Mask = std::vector<std::uint8_t>;

void validate_grid(const LabelGrid& g);

/// Chamber volumes m_1..m_N in physical units.
VolumeVector volumes(const LabelGrid& g);

/// In-box volume of the exterior chamber (label 0).
double exterior_volume_in_box(const LabelGrid& g);

/// d_region(A,B) = cellVolume * sum over chambers 0..N of symmetric
/// difference cell counts inside the region.
double relative_distance(const LabelGrid& a, const LabelGrid& b,
                         const Mask& region);
double relative_distance(const LabelGrid& a, const LabelGrid& b);

/// Cells of label h with at least one axis neighbor of a different label.
/// In free mode, cells outside the box count as exterior (label 0).
std::vector<int> boundary_cells(const LabelGrid& g, int h);

/// Union of boundary_cells(g, h) over h = 1..N, as a mask.
Mask cluster_boundary(const LabelGrid& g);

Mask chamber_mask(const LabelGrid& g, int h);

// FCLG (label grid) and FCLS (soft cluster) file formats.
std::vector<std::uint8_t> serialize_grid(const LabelGrid& g);
LabelGrid parse_grid(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_soft(const SoftCluster& sc);
SoftCluster parse_soft(const std::vector<std::uint8_t>& bytes);

LabelGrid read_grid_file(const std::string& path);
void write_grid_file(const LabelGrid& g, const std::string& path);
SoftCluster read_soft_file(const std::string& path);
void write_soft_file(const SoftCluster& sc, const std::string& path);

struct SeedDescriptor {
  enum class Kind { Balls, Random };
  Kind kind = Kind::Balls;
  VolumeVector volumes;                         // target chamber volumes
  std::vector<std::array<double, 3>> centers;   // optional; auto-placed if empty
  std::uint64_t seed = 0;                       // Random mode
};

/// Initial cluster: disjoint rasterized balls of prescribed volumes, or
/// random labels with exact cell counts under a fixed seed.
LabelGrid seed_cluster(const DomainSpec& d, int N, const SeedDescriptor& sd);

}  // namespace fcl
