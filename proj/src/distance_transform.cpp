#include "fcl/distance_transform.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fcl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher exact 1-D squared-distance transform.
void edt_line(const std::vector<double>& f, std::vector<double>& out) {
  int m = (int)f.size();
  std::vector<int> v(m);
  std::vector<double> z(m + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < m; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[0]] == kInf) {
      v[0] = q;
      continue;
    }
    double s;
    for (;;) {
      int p = v[k];
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < m; ++q) {
    if (f[v[0]] == kInf) {
      out[q] = kInf;
      continue;
    }
    while (z[k + 1] < q) ++k;
    double dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> distance_transform(const DomainSpec& d, const Mask& seeds) {
  if ((int)seeds.size() != d.cells())
    throw std::invalid_argument("distance_transform: mask size mismatch");
  std::vector<double> sq(d.cells());
  for (int i = 0; i < d.cells(); ++i) sq[i] = seeds[i] ? 0.0 : kInf;

  bool wrap = d.mode == Mode::Periodic;
  for (int axis = 0; axis < d.n; ++axis) {
    int m = d.dims[axis];
    int lineLen = wrap ? 3 * m : m;
    std::vector<double> line(lineLen), res(lineLen);
    // iterate over all lines along this axis
    std::array<int, 3> c{0, 0, 0};
    int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
    for (c[o1] = 0; c[o1] < d.dims[o1]; ++c[o1]) {
      for (c[o2] = 0; c[o2] < d.dims[o2]; ++c[o2]) {
        for (int t = 0; t < m; ++t) {
          c[axis] = t;
          double v = sq[d.index(c)];
          if (wrap) {
            line[t] = line[t + m] = line[t + 2 * m] = v;
          } else {
            line[t] = v;
          }
        }
        edt_line(line, res);
        for (int t = 0; t < m; ++t) {
          c[axis] = t;
          sq[d.index(c)] = wrap ? res[t + m] : res[t];
        }
      }
    }
  }
  double h = d.cellSize;
  for (auto& v : sq) v = std::isinf(v) ? kInf : std::sqrt(v) * h;
  return sq;
}

}  // namespace fcl
