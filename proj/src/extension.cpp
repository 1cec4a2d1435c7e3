#include "fcl/extension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "fcl/fft.hpp"
#include "fcl/quadrature.hpp"

namespace fcl {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// continuum mass of z^s / (|x|^2 + z^2)^{(n+s)/2} over R^n (z-independent)
double poisson_total_mass(int n, double s) {
  double Q0 = 0.5 * std::exp(std::lgamma(n / 2.0) + std::lgamma(s / 2.0) -
                             std::lgamma((n + s) / 2.0));
  return n * omega_n(n) * Q0;
}

double poisson_point(int n, double s, const std::array<double, 3>& x,
                     double z) {
  double r2 = z * z;
  for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
  return std::pow(z, s) * std::pow(r2, -(n + s) / 2.0);
}

// radial tail of the level-z kernel: int_rho^inf z^s r^{n-1}
// (r^2+z^2)^{-(n+s)/2} dr, reduced to a regular angular integral
double poisson_tail_Q(int n, double s, double z, double rho) {
  double phiMax = M_PI / 2.0 - std::atan(rho / z);
  if (phiMax <= 0.0) return 0.0;
  double tMax = std::pow(phiMax, s);
  const auto& xs = gl_nodes(24);
  const auto& ws = gl_weights(24);
  double sum = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double t = 0.5 * tMax * (1.0 + xs[i]);
    double phi = std::pow(t, 1.0 / s);
    double ratio = phi > 1e-8 ? std::sin(phi) / phi : 1.0;
    sum += 0.5 * tMax * ws[i] * std::pow(std::cos(phi), n - 1) *
           std::pow(ratio, s - 1.0) / s;
  }
  return sum;
}

// kernel mass of the cell at integer offset delta, level z
double cell_weight(const DomainSpec& d, double z,
                   const std::array<int, 3>& delta) {
  int n = d.n;
  double s = d.s, h = d.cellSize;
  int linf = 0;
  for (int a = 0; a < n; ++a) linf = std::max(linf, std::abs(delta[a]));
  if (linf == 0) {
    // central cell: total mass minus the outside-box tail (exact even when
    // the kernel peak is far narrower than the cell)
    std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0}, x{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      lo[a] = -h / 2.0;
      hi[a] = h / 2.0;
    }
    auto Q = [&](double rho) { return poisson_tail_Q(n, s, z, rho); };
    return poisson_total_mass(n, s) -
           outside_box_radial(n, lo, hi, x, Q, 1e-9);
  }
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    lo[a] = delta[a] * h - h / 2.0;
    hi[a] = delta[a] * h + h / 2.0;
  }
  auto f = [&](const std::array<double, 3>& x) {
    return poisson_point(n, s, x, z);
  };
  if (linf <= 2) return integrate_box(n, lo, hi, f, 1e-7, 0.0);
  // smooth far field: tensor Gauss of order 2 per cell
  const auto& xs = gl_nodes(2);
  const auto& ws = gl_weights(2);
  double sum = 0.0;
  std::array<int, 3> idx{0, 0, 0};
  std::array<double, 3> p{0, 0, 0};
  int counts[3] = {n > 0 ? 2 : 1, n > 1 ? 2 : 1, n > 2 ? 2 : 1};
  for (idx[0] = 0; idx[0] < counts[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < counts[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < counts[2]; ++idx[2]) {
        double w = 1.0;
        for (int a = 0; a < n; ++a) {
          p[a] = delta[a] * h + 0.5 * h * xs[idx[a]];
          w *= 0.5 * h * ws[idx[a]];
        }
        sum += w * f(p);
      }
  return sum;
}

struct LevelKernel {
  std::vector<double> stencil;  // on the convolution grid, offset-wrapped
  double windowMass = 0.0;
};

// per-level discrete kernel on the convolution grid
LevelKernel build_level_kernel(const DomainSpec& d,
                               const std::array<int, 3>& cd, double z) {
  LevelKernel lk;
  long long total = (long long)cd[0] * cd[1] * cd[2];
  lk.stencil.assign(total, 0.0);
  std::map<std::array<int, 3>, double> cache;
  auto weight = [&](std::array<int, 3> delta) {
    std::array<int, 3> key{0, 0, 0};
    for (int a = 0; a < d.n; ++a) key[a] = std::abs(delta[a]);
    std::sort(key.begin(), key.begin() + d.n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    double w = cell_weight(d, z, key);
    cache.emplace(key, w);
    return w;
  };
  std::array<int, 3> delta{0, 0, 0};
  std::function<void(int)> fill = [&](int axis) {
    if (axis == d.n) {
      double w;
      if (d.mode == Mode::Periodic) {
        // lattice images within two box lengths
        w = 0.0;
        std::array<int, 3> m{0, 0, 0};
        std::function<void(int)> img = [&](int ax) {
          if (ax == d.n) {
            std::array<int, 3> dd = delta;
            for (int a = 0; a < d.n; ++a) dd[a] += m[a] * d.dims[a];
            w += weight(dd);
            return;
          }
          for (m[ax] = -2; m[ax] <= 2; ++m[ax]) img(ax + 1);
        };
        img(0);
      } else {
        w = weight(delta);
      }
      std::array<int, 3> idx{0, 0, 0};
      for (int a = 0; a < d.n; ++a)
        idx[a] = ((delta[a] % cd[a]) + cd[a]) % cd[a];
      lk.stencil[(idx[0] * (long long)cd[1] + idx[1]) * cd[2] + idx[2]] = w;
      lk.windowMass += w;
      return;
    }
    int lo = d.mode == Mode::Periodic ? -(d.dims[axis] - 1) / 2 - 1
                                      : -(d.dims[axis] - 1);
    int hi = d.mode == Mode::Periodic ? d.dims[axis] / 2 : d.dims[axis] - 1;
    if (d.mode == Mode::Periodic) {
      lo = -(d.dims[axis] / 2);
      hi = d.dims[axis] - 1 + lo;
    }
    for (int v = lo; v <= hi; ++v) {
      delta[axis] = v;
      fill(axis + 1);
    }
  };
  fill(0);
  return lk;
}

}  // namespace

std::vector<double> default_z_levels(const DomainSpec& d) {
  // the bottom level controls trace recovery: the continuum error at
  // distance D decays like (z/D)^s, so z0 must sit well below the cell size
  double z0 = d.cellSize / 256.0;
  // the top must sit well above the largest feature so the slab carries
  // nearly all of the weighted Dirichlet energy
  double z1 = 2.0 * d.L;
  int count = std::max(
      16, (int)std::ceil(std::log(z1 / z0) / std::log(1.15)) + 1);
  double ratio = std::pow(z1 / z0, 1.0 / (count - 1));
  std::vector<double> z(count);
  for (int i = 0; i < count; ++i) z[i] = z0 * std::pow(ratio, i);
  z.back() = z1;
  return z;
}

ExtensionField poisson_extend(const Mask& E, const DomainSpec& d,
                              const std::vector<double>& zLevels,
                              double exteriorTrace) {
  if ((int)E.size() != d.cells())
    throw std::invalid_argument("poisson_extend: mask size mismatch");
  if (zLevels.empty() || zLevels.front() <= 0.0 ||
      !std::is_sorted(zLevels.begin(), zLevels.end()))
    throw std::invalid_argument(
        "poisson_extend: z-levels must be positive and increasing");
  if (zLevels.back() > 4.0 * d.L)
    throw std::invalid_argument(
        "poisson_extend: largest z-level far exceeds the box size");

  ExtensionField f;
  f.domain = d;
  f.a = 1.0 - d.s;
  f.zLevels = zLevels;
  f.kernelMass = poisson_total_mass(d.n, d.s);
  f.trace.resize(d.cells());
  for (int i = 0; i < d.cells(); ++i) f.trace[i] = E[i] ? 1.0 : -1.0;

  std::array<int, 3> cd{1, 1, 1};
  for (int a = 0; a < d.n; ++a)
    cd[a] = d.mode == Mode::Periodic ? d.dims[a] : 2 * d.dims[a];
  long long total = (long long)cd[0] * cd[1] * cd[2];
  FftGrid fft(cd, d.n);

  std::vector<double> traceField(total, 0.0), ones(total, 0.0);
  for (int i = 0; i < d.cells(); ++i) {
    auto c = d.coords(i);
    long long j = (c[0] * (long long)cd[1] + c[1]) * cd[2] + c[2];
    traceField[j] = f.trace[i];
    ones[j] = 1.0;
  }
  auto traceHat = fft.forward(traceField);
  std::vector<std::complex<double>> onesHat;
  if (d.mode == Mode::Free) onesHat = fft.forward(ones);

  double T = f.kernelMass;
  f.values.resize(zLevels.size());
  for (size_t lv = 0; lv < zLevels.size(); ++lv) {
    auto lk = build_level_kernel(d, cd, zLevels[lv]);
    if (d.mode == Mode::Periodic) {
      // smear the lattice tail so the wrapped kernel carries the full mass
      double smear = (T - lk.windowMass) / (double)total;
      for (auto& v : lk.stencil) v += smear;
    }
    auto kHat = fft.forward(lk.stencil);
    auto uHat = kHat;
    for (size_t i = 0; i < uHat.size(); ++i) uHat[i] *= traceHat[i];
    auto conv = fft.inverse(uHat);
    std::vector<double> inbox;
    if (d.mode == Mode::Free) {
      for (size_t i = 0; i < kHat.size(); ++i) kHat[i] *= onesHat[i];
      inbox = fft.inverse(kHat);
    }
    auto& u = f.values[lv];
    u.resize(d.cells());
    for (int i = 0; i < d.cells(); ++i) {
      auto c = d.coords(i);
      long long j = (c[0] * (long long)cd[1] + c[1]) * cd[2] + c[2];
      double v = conv[j];
      if (d.mode == Mode::Free)
        v += exteriorTrace * (T - std::min(inbox[j], T));
      u[i] = std::clamp(v / T, -1.0, 1.0);
    }
  }
  return f;
}

ExtensionField poisson_extend_halfspace(const DomainSpec& d, int axis,
                                        double c,
                                        const std::vector<double>& zLevels) {
  if (axis < 0 || axis >= d.n)
    throw std::invalid_argument("poisson_extend_halfspace: bad axis");
  ExtensionField f;
  f.domain = d;
  f.a = 1.0 - d.s;
  f.zLevels = zLevels;
  f.kernelMass = poisson_total_mass(d.n, d.s);
  double cm = f.kernelMass / poisson_total_mass(1, d.s);
  f.trace.resize(d.cells());
  for (int i = 0; i < d.cells(); ++i)
    f.trace[i] = d.center(i)[axis] > c ? 1.0 : -1.0;
  f.values.resize(zLevels.size());
  for (size_t lv = 0; lv < zLevels.size(); ++lv) {
    double z = zLevels[lv];
    auto& u = f.values[lv];
    u.resize(d.cells());
    for (int i = 0; i < d.cells(); ++i) {
      double dd = d.center(i)[axis] - c;
      double sign = dd > 0 ? 1.0 : (dd < 0 ? -1.0 : 0.0);
      double tail = cm * poisson_tail_Q(1, d.s, z, std::abs(dd));
      u[i] = sign * (1.0 - 2.0 * tail / f.kernelMass);
    }
  }
  return f;
}

std::vector<ExtensionField> poisson_extend(const LabelGrid& g,
                                           const std::vector<double>& zLevels) {
  std::vector<ExtensionField> out;
  for (int h = 0; h <= g.N; ++h) {
    Mask m = chamber_mask(g, h);
    double ext = (h == 0 && g.domain.mode == Mode::Free) ? 1.0 : -1.0;
    out.push_back(poisson_extend(m, g.domain, zLevels, ext));
  }
  return out;
}

namespace {

// squared x-gradient of one level: spectral (periodic) or centered (free)
std::vector<double> grad_x_sq(const DomainSpec& d,
                              const std::vector<double>& u) {
  std::vector<double> g2(d.cells(), 0.0);
  if (d.mode == Mode::Periodic) {
    std::array<int, 3> cd{1, 1, 1};
    for (int a = 0; a < d.n; ++a) cd[a] = d.dims[a];
    FftGrid fft(cd, d.n);
    auto uh = fft.forward(u);
    // spectrum layout: last transformed axis halved (r2c)
    int lastAxis = d.n - 1;
    int lastHalf = cd[lastAxis] / 2 + 1;
    for (int axis = 0; axis < d.n; ++axis) {
      auto dh = uh;
      std::array<int, 3> sdims{1, 1, 1};
      for (int a = 0; a < d.n; ++a) sdims[a] = a == lastAxis ? lastHalf : cd[a];
      for (long long idx = 0; idx < (long long)dh.size(); ++idx) {
        long long rem = idx;
        int c2 = (int)(rem % sdims[2]);
        rem /= sdims[2];
        int c1 = (int)(rem % sdims[1]);
        int c0 = (int)(rem / sdims[1]);
        int freqIdx[3] = {c0, c1, c2};
        int m = freqIdx[axis];
        if (m > d.dims[axis] / 2) m -= d.dims[axis];
        if (2 * m == d.dims[axis] || 2 * m == -d.dims[axis]) m = 0;  // Nyquist
        double k = 2.0 * M_PI * m / d.L;
        dh[idx] *= std::complex<double>(0.0, k);
      }
      auto gax = fft.inverse(dh);
      for (int i = 0; i < d.cells(); ++i) g2[i] += gax[i] * gax[i];
    }
    return g2;
  }
  double h = d.cellSize;
  for (int i = 0; i < d.cells(); ++i) {
    auto c = d.coords(i);
    for (int axis = 0; axis < d.n; ++axis) {
      auto cm = c, cp = c;
      cm[axis] -= 1;
      cp[axis] += 1;
      double g;
      if (cm[axis] < 0)
        g = (u[d.index(cp)] - u[i]) / h;
      else if (cp[axis] >= d.dims[axis])
        g = (u[i] - u[d.index(cm)]) / h;
      else
        g = (u[d.index(cp)] - u[d.index(cm)]) / (2.0 * h);
      g2[i] += g * g;
    }
  }
  return g2;
}

// accumulated energy; restrict = nullptr for the full slab, otherwise the
// half-ball |x - x0|^2 + zmid^2 <= r^2
double energy_impl(const ExtensionField& f, const std::vector<size_t>& levels,
                   const std::vector<std::vector<double>>& gx2All,
                   const std::array<double, 3>* x0, double r) {
  const auto& d = f.domain;
  double a = f.a;
  double hv = d.cellVolume();
  std::vector<const std::vector<double>*> gx2(levels.size());
  for (size_t k = 0; k < levels.size(); ++k) gx2[k] = &gx2All[levels[k]];

  std::vector<double> dist2;
  if (x0) {
    dist2.resize(d.cells());
    for (int i = 0; i < d.cells(); ++i) {
      auto c = d.center(i);
      double r2 = 0.0;
      for (int ax = 0; ax < d.n; ++ax) {
        double dd = c[ax] - (*x0)[ax];
        if (d.mode == Mode::Periodic) dd -= d.L * std::round(dd / d.L);
        r2 += dd * dd;
      }
      dist2[i] = r2;
    }
  }

  auto panel = [&](double zlo, double zhi, const std::vector<double>& glow2,
                   const std::vector<double>* ghigh2,
                   const std::vector<double>& ulow,
                   const std::vector<double>* uhigh,
                   const std::vector<double>* traceLow) {
    double W = (std::pow(zhi, 1.0 + a) - std::pow(zlo, 1.0 + a)) / (1.0 + a);
    double zmid = zlo > 0.0 ? std::sqrt(zlo * zhi) : 0.5 * zhi;
    double dz = zhi - (traceLow ? 0.0 : zlo);
    double acc = 0.0;
    for (int i = 0; i < d.cells(); ++i) {
      if (x0 && dist2[i] + zmid * zmid > r * r) continue;
      double gz;
      if (traceLow)
        gz = (ulow[i] - (*traceLow)[i]) / dz;
      else
        gz = ((*uhigh)[i] - ulow[i]) / dz;
      double gx = traceLow || !ghigh2 ? glow2[i]
                                      : 0.5 * (glow2[i] + (*ghigh2)[i]);
      acc += W * (gx + gz * gz);
    }
    return acc * hv;
  };

  double E = 0.0;
  // bottom panel [0, z_first]: z-derivative against the trace
  E += panel(0.0, f.zLevels[levels[0]], *gx2[0], nullptr,
             f.values[levels[0]], nullptr, &f.trace);
  for (size_t k = 0; k + 1 < levels.size(); ++k)
    E += panel(f.zLevels[levels[k]], f.zLevels[levels[k + 1]], *gx2[k],
               gx2[k + 1], f.values[levels[k]], &f.values[levels[k + 1]],
               nullptr);
  return E;
}

// measure (h^{n-1} per face) of trace-jump faces, optionally within
// distance r of x0; the interface edge set of the trace at z = 0
double edge_measure(const ExtensionField& f, const std::array<double, 3>* x0,
                    double r) {
  const auto& d = f.domain;
  double h = d.cellSize;
  double m = 0.0;
  for (int i = 0; i < d.cells(); ++i) {
    auto c = d.coords(i);
    for (int axis = 0; axis < d.n; ++axis) {
      auto cc = c;
      cc[axis] += 1;
      if (cc[axis] >= d.dims[axis]) {
        if (d.mode == Mode::Periodic)
          cc[axis] = 0;
        else
          continue;
      }
      int j = d.index(cc);
      if (f.trace[i] * f.trace[j] >= 0.0) continue;
      if (x0) {
        auto xi = d.center(i);
        double r2 = 0.0;
        for (int a = 0; a < d.n; ++a) {
          double dd = xi[a] - (*x0)[a];
          if (a == axis) dd += h / 2.0;  // face midpoint
          if (d.mode == Mode::Periodic) dd -= d.L * std::round(dd / d.L);
          r2 += dd * dd;
        }
        if (r2 > r * r) continue;
      }
      m += std::pow(h, d.n - 1);
    }
  }
  return m;
}

double edge_core_coefficient(double s, Mode mode);

// energy with the subgrid interface-core compensation
double corrected_energy(const ExtensionField& f,
                        const std::vector<size_t>& levels,
                        const std::vector<std::vector<double>>& gx2,
                        const std::array<double, 3>* x0, double r) {
  const auto& d = f.domain;
  double E = energy_impl(f, levels, gx2, x0, r);
  double A = edge_core_coefficient(d.s, d.mode);
  return E + A * std::pow(d.cellSize, 1.0 - d.s) * edge_measure(f, x0, r);
}

std::vector<size_t> all_levels(const ExtensionField& f) {
  std::vector<size_t> lv(f.zLevels.size());
  for (size_t i = 0; i < lv.size(); ++i) lv[i] = i;
  return lv;
}

std::vector<std::vector<double>> all_grads(const ExtensionField& f) {
  std::vector<std::vector<double>> g(f.values.size());
  for (size_t i = 0; i < f.values.size(); ++i)
    g[i] = grad_x_sq(f.domain, f.values[i]);
  return g;
}

// The grid cannot resolve the interface core below z ~ cellSize, where the
// continuum energy density carries a fixed h^{1-s} quantum per unit edge
// length. The deficit is calibrated once per (s, gradient scheme) against
// the exact self-similar half-space extension in one dimension.
double edge_core_coefficient(double s, Mode mode) {
  static std::map<std::pair<double, int>, double> cache;
  static std::mutex mu;
  std::pair<double, int> key{s, mode == Mode::Periodic ? 1 : 0};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  double r = 16.0;  // cellSize = 1 in the calibration domain
  double Econt = (4.0 / poisson_total_mass(1, s)) * std::pow(r, 1.0 - s) /
                 (1.0 - s);
  double Edisc;
  if (mode == Mode::Free) {
    auto d1 = make_domain(1, {64}, 64.0, Mode::Free, s);
    auto zl = default_z_levels(d1);
    auto f = poisson_extend_halfspace(d1, 0, 32.0, zl);
    std::array<double, 3> x0{32.0, 0, 0};
    Edisc = energy_impl(f, all_levels(f), all_grads(f), &x0, r);
  } else {
    // wide periodic stripe: the second interface sits far outside the ball
    auto d1 = make_domain(1, {256}, 256.0, Mode::Periodic, s);
    auto zl = default_z_levels(d1);
    Mask E(d1.cells(), 0);
    for (int i = 0; i < d1.cells(); ++i) {
      double x = d1.center(i)[0];
      if (x > 64.0 && x < 192.0) E[i] = 1;
    }
    auto f = poisson_extend(E, d1, zl);
    std::array<double, 3> x0{64.0, 0, 0};
    Edisc = energy_impl(f, all_levels(f), all_grads(f), &x0, r);
  }
  double A = Econt - Edisc;
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, A);
  return A;
}

}  // namespace

double dirichlet_energy(const ExtensionField& f) {
  return corrected_energy(f, all_levels(f), all_grads(f), nullptr, 0.0);
}

double dirichlet_energy(const ExtensionField& f,
                        const std::array<double, 3>& x0, double r) {
  if (r > f.zLevels.back())
    throw std::invalid_argument("dirichlet_energy: radius exceeds the slab");
  return corrected_energy(f, all_levels(f), all_grads(f), &x0, r);
}

std::string PhiProfile::to_csv() const {
  std::ostringstream os;
  os << "radius,phi,phiPlusTerm,errEstimate\n";
  for (size_t k = 0; k < radii.size(); ++k)
    os << fmt17(radii[k]) << "," << fmt17(phi[k]) << ","
       << fmt17(phi[k] + lambdaPrime * std::pow(radii[k], s)) << ","
       << fmt17(errEstimate[k]) << "\n";
  return os.str();
}

PhiProfile phi_profile(const LabelGrid& g, int cell,
                       const std::vector<double>& radii) {
  const auto& d = g.domain;
  if (radii.empty()) throw std::invalid_argument("phi_profile: no radii");
  auto cb = cluster_boundary(g);
  if (!cb[cell])
    throw std::invalid_argument("phi_profile: cell not on the boundary");
  auto zl = default_z_levels(d);
  double rmin = *std::min_element(radii.begin(), radii.end());
  double rmax = *std::max_element(radii.begin(), radii.end());
  if (rmin < 4.0 * d.cellSize)
    throw std::invalid_argument("phi_profile: radius below resolution");
  if (rmax > zl.back())
    throw std::invalid_argument("phi_profile: radius exceeds the slab");

  PhiProfile p;
  p.center = d.center(cell);
  // snap to the face shared with the first differently-labeled neighbor:
  // the discrete interface lives on cell faces, not cell centers
  {
    auto c = d.coords(cell);
    for (int axis = 0; axis < d.n; ++axis) {
      bool found = false;
      for (int st = -1; st <= 1; st += 2) {
        auto cc = c;
        cc[axis] += st;
        if (cc[axis] < 0 || cc[axis] >= d.dims[axis]) {
          if (d.mode == Mode::Periodic)
            cc[axis] = (cc[axis] + d.dims[axis]) % d.dims[axis];
          else
            continue;
        }
        if (g.labels[d.index(cc)] != g.labels[cell]) {
          p.center[axis] += st * d.cellSize / 2.0;
          found = true;
          break;
        }
      }
      if (found) break;
    }
  }
  auto fields = poisson_extend(g, zl);
  auto res = phi_profile(fields, p.center, radii);
  return res;
}

PhiProfile phi_profile(const std::vector<ExtensionField>& fields,
                       const std::array<double, 3>& center,
                       const std::vector<double>& radii) {
  if (fields.empty() || radii.empty())
    throw std::invalid_argument("phi_profile: empty input");
  const auto& d = fields.front().domain;
  const auto& zl = fields.front().zLevels;
  double rmin = *std::min_element(radii.begin(), radii.end());
  double rmax = *std::max_element(radii.begin(), radii.end());
  if (rmin < 4.0 * d.cellSize)
    throw std::invalid_argument("phi_profile: radius below resolution");
  if (rmax > zl.back())
    throw std::invalid_argument("phi_profile: radius exceeds the slab");

  PhiProfile p;
  p.center = center;
  p.s = d.s;
  p.radii = radii;
  p.phi.assign(radii.size(), 0.0);
  p.errEstimate.assign(radii.size(), 0.0);
  std::vector<size_t> coarse;
  for (size_t i = 0; i < zl.size(); i += 2) coarse.push_back(i);
  for (const auto& f : fields) {
    auto gx2 = all_grads(f);
    for (size_t k = 0; k < radii.size(); ++k) {
      double fine = corrected_energy(f, all_levels(f), gx2, &p.center,
                                     radii[k]);
      double crs = corrected_energy(f, coarse, gx2, &p.center, radii[k]);
      double scale = std::pow(radii[k], -(d.n - d.s));
      p.phi[k] += scale * fine;
      p.errEstimate[k] += scale * std::abs(fine - crs);
    }
  }
  double lam = 0.0;
  for (size_t k = 0; k + 1 < p.radii.size(); ++k) {
    double drs = std::pow(p.radii[k + 1], d.s) - std::pow(p.radii[k], d.s);
    if (drs > 0.0) lam = std::max(lam, (p.phi[k] - p.phi[k + 1]) / drs);
  }
  p.lambdaPrime = lam;
  return p;
}

CheckReport check_monotonicity(const PhiProfile& profile, double lambdaPrime) {
  if (profile.radii.size() < 4)
    throw std::invalid_argument("check_monotonicity: need >= 4 radii");
  CheckReport rep;
  rep.name = "monotonicity";
  bool pass = true;
  double worst = 0.0;
  for (size_t k = 0; k + 1 < profile.radii.size(); ++k) {
    double lhs = profile.phi[k] + lambdaPrime * std::pow(profile.radii[k],
                                                         profile.s);
    double rhs = profile.phi[k + 1] +
                 lambdaPrime * std::pow(profile.radii[k + 1], profile.s);
    double slack = rhs - lhs + profile.errEstimate[k] +
                   profile.errEstimate[k + 1];
    worst = std::min(worst, slack);
    if (slack < 0.0) pass = false;
  }
  rep.pass = pass;
  rep.tolerance = 0.0;
  rep.measured["worstSlack"] = worst;
  rep.measured["minimalLambdaPrime"] = profile.lambdaPrime;
  rep.bounds["lambdaPrime"] = lambdaPrime;
  rep.context = std::to_string(profile.radii.size()) + " radii";
  return rep;
}

void write_extension_field(const ExtensionField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_extension_field: cannot open " +
                                     path);
  const auto& d = f.domain;
  out << "FCLS 1\n";
  out << "# z";
  for (double z : f.zLevels) out << " " << fmt17(z);
  out << "\n";
  out << "n " << d.n << "\n";
  out << "dims " << d.dims[0] << " " << d.dims[1] << " " << d.dims[2] << "\n";
  out << "L " << fmt17(d.L) << "\n";
  out << "N " << f.zLevels.size() << "\n";
  out << "s " << fmt17(d.s) << "\n";
  out << "mode " << (d.mode == Mode::Periodic ? "periodic" : "free") << "\n";
  out << "fields " << f.zLevels.size() << "\n\n";
  for (const auto& level : f.values)
    out.write(reinterpret_cast<const char*>(level.data()),
              (std::streamsize)(level.size() * sizeof(double)));
}

}  // namespace fcl
