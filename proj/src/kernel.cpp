#include "fcl/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fcl/quadrature.hpp"

namespace fcl {

namespace {

// int_{t0}^{t1} (a^2 + u^2)^{-p/2} du via u = a tan(theta).
double segment_power(double a, double t0, double t1, double p) {
  double th0 = std::atan2(t0, a), th1 = std::atan2(t1, a);
  const auto& xs = gl_nodes(20);
  const auto& ws = gl_weights(20);
  double mid = 0.5 * (th0 + th1), half = 0.5 * (th1 - th0);
  double sum = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double th = mid + half * xs[i];
    sum += ws[i] * std::pow(std::cos(th), p - 2.0);
  }
  return std::pow(a, 1.0 - p) * sum * half;
}

// int over [u0,u1] x [v0,v1] of (a^2 + u^2 + v^2)^{-p/2}, by nested rules:
// exact-substitution inner integral, graded panels outward in v.
double rect_power(double a, double u0, double u1, double v0, double v1,
                  double p) {
  auto inner = [&](double v) {
    double b = std::sqrt(a * a + v * v);
    return segment_power(b, u0, u1, p);
  };
  auto panel = [&](double lo, double hi) {
    const auto& xs = gl_nodes(12);
    const auto& ws = gl_weights(12);
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double sum = 0.0;
    for (size_t i = 0; i < xs.size(); ++i)
      sum += ws[i] * inner(mid + half * xs[i]);
    return sum * half;
  };
  // Split at the foot point v = 0 and grade panels geometrically.
  double total = 0.0;
  for (int side = 0; side < 2; ++side) {
    double end = side ? v1 : -v0;  // extent on this side of 0
    if (end <= 0.0) continue;
    double prev = 0.0, step = a;
    while (prev < end) {
      double next = std::min(end, prev + step);
      if (side)
        total += panel(prev, next);
      else
        total += panel(-next, -prev);
      prev = next;
      step *= 2.0;
    }
  }
  // Handle ranges that do not straddle 0.
  if (v0 > 0.0) {
    // subtract the part [0, v0] that the loop added
    double sub = 0.0, prev = 0.0, step = a;
    while (prev < v0) {
      double next = std::min(v0, prev + step);
      sub += panel(prev, next);
      prev = next;
      step *= 2.0;
    }
    total -= sub;
  }
  if (v1 < 0.0) {
    double sub = 0.0, prev = 0.0, step = a;
    while (prev < -v1) {
      double next = std::min(-v1, prev + step);
      sub += panel(-next, -prev);
      prev = next;
      step *= 2.0;
    }
    total -= sub;
  }
  return total;
}

}  // namespace

double power_outside_box(int n, double q, const std::array<double, 3>& lo,
                         const std::array<double, 3>& hi,
                         const std::array<double, 3>& x) {
  for (int a = 0; a < n; ++a)
    if (!(lo[a] < x[a] && x[a] < hi[a]))
      throw std::invalid_argument("power_outside_box: x must be inside box");
  if (n == 1)
    return (std::pow(x[0] - lo[0], -q) + std::pow(hi[0] - x[0], -q)) / q;
  double total = 0.0;
  for (int axis = 0; axis < n; ++axis) {
    int o1 = (axis + 1) % n, o2 = (axis + 2) % n;
    for (int side = 0; side < 2; ++side) {
      double a = side ? (hi[axis] - x[axis]) : (x[axis] - lo[axis]);
      if (n == 2) {
        total += a * segment_power(a, lo[o1] - x[o1], hi[o1] - x[o1], q + 2.0);
      } else {
        total += a * rect_power(a, lo[o1] - x[o1], hi[o1] - x[o1],
                                lo[o2] - x[o2], hi[o2] - x[o2], q + 3.0);
      }
    }
  }
  return total / q;
}

double cell_interaction(const std::array<int, 3>& delta, const DomainSpec& d) {
  return std::pow(d.cellSize, d.n - d.s) * unit_offset_integral(d.n, d.s, delta);
}

namespace {

struct JCache {
  int n;
  double s;
  std::map<std::array<int, 3>, double> values;
  double get(std::array<int, 3> delta) {
    for (int a = 0; a < 3; ++a) delta[a] = std::abs(delta[a]);
    std::sort(delta.begin(), delta.begin() + n, std::greater<int>());
    auto it = values.find(delta);
    if (it != values.end()) return it->second;
    double v = unit_offset_integral(n, s, delta);
    values.emplace(delta, v);
    return v;
  }
};

int wrap(int v, int m) { return ((v % m) + m) % m; }

}  // namespace

double KernelTensor::K(const std::array<int, 3>& delta) const {
  std::array<int, 3> idx{0, 0, 0};
  if (domain.mode == Mode::Free) {
    for (int a = 0; a < domain.n; ++a) {
      if (std::abs(delta[a]) >= domain.dims[a]) return 0.0;
      idx[a] = wrap(delta[a], convDims[a]);
    }
  } else {
    for (int a = 0; a < domain.n; ++a) idx[a] = wrap(delta[a], domain.dims[a]);
  }
  return Kconv[(idx[0] * (long long)convDims[1] + idx[1]) * convDims[2] +
               idx[2]];
}

std::vector<double> KernelTensor::correlate(
    const std::vector<double>& field) const {
  if ((int)field.size() != domain.cells())
    throw std::invalid_argument("correlate: field size mismatch");
  long long convTotal = (long long)convDims[0] * convDims[1] * convDims[2];
  std::vector<double> padded(convTotal, 0.0);
  for (int i = 0; i < domain.cells(); ++i) {
    auto c = domain.coords(i);
    long long j = (c[0] * (long long)convDims[1] + c[1]) * convDims[2] + c[2];
    padded[j] = field[i];
  }
  auto spec = fft->forward(padded);
  for (size_t k = 0; k < spec.size(); ++k) spec[k] *= Khat[k];
  auto conv = fft->inverse(spec);
  std::vector<double> out(domain.cells());
  for (int i = 0; i < domain.cells(); ++i) {
    auto c = domain.coords(i);
    long long j = (c[0] * (long long)convDims[1] + c[1]) * convDims[2] + c[2];
    out[i] = conv[j];
  }
  return out;
}

KernelTensor build_kernel(const DomainSpec& d, const KernelOptions& opts) {
  KernelTensor k;
  k.domain = d;
  k.opts = opts;
  double hpow = std::pow(d.cellSize, d.n - d.s);
  JCache jc{d.n, d.s, {}};

  if (d.mode == Mode::Free) {
    for (int a = 0; a < 3; ++a)
      k.convDims[a] = (a < d.n) ? 2 * d.dims[a] : 1;
    long long convTotal =
        (long long)k.convDims[0] * k.convDims[1] * k.convDims[2];
    k.Kconv.assign(convTotal, 0.0);
    std::array<int, 3> delta{0, 0, 0};
    std::function<void(int)> fill = [&](int axis) {
      if (axis == d.n) {
        bool zero = true;
        for (int a = 0; a < d.n; ++a)
          if (delta[a] != 0) zero = false;
        if (zero) return;
        std::array<int, 3> idx{0, 0, 0};
        for (int a = 0; a < d.n; ++a) idx[a] = wrap(delta[a], k.convDims[a]);
        k.Kconv[(idx[0] * (long long)k.convDims[1] + idx[1]) * k.convDims[2] +
                idx[2]] = hpow * jc.get(delta);
        return;
      }
      for (int v = -(d.dims[axis] - 1); v <= d.dims[axis] - 1; ++v) {
        delta[axis] = v;
        fill(axis + 1);
      }
    };
    fill(0);
  } else {
    // Periodic: lattice-image sum with an integral tail correction whose
    // residual is certified via the next-order moment integral.
    int C = opts.latticeCutoff;
    for (;;) {
      for (int a = 0; a < 3; ++a) k.convDims[a] = (a < d.n) ? d.dims[a] : 1;
      long long convTotal =
          (long long)k.convDims[0] * k.convDims[1] * k.convDims[2];
      k.Kconv.assign(convTotal, 0.0);
      double volLattice = 1.0;
      int maxDim = 0;
      for (int a = 0; a < d.n; ++a) {
        volLattice *= d.dims[a];
        maxDim = std::max(maxDim, d.dims[a]);
      }
      double cEng = (d.n + d.s) * (d.n + d.s + 1.0) / 8.0;
      // canonical-offset caches for the sum and both tail integrals
      std::map<std::array<int, 3>, std::array<double, 3>> canon;
      double worstRatio = 0.0;
      bool ok = true;
      for (int i = 0; i < d.cells(); ++i) {
        auto c = d.coords(i);
        bool zero = true;
        std::array<int, 3> rep{0, 0, 0};
        for (int a = 0; a < d.n; ++a) {
          int v = c[a];
          if (v > d.dims[a] / 2) v -= d.dims[a];
          rep[a] = v;
          if (v != 0) zero = false;
        }
        if (zero) continue;
        std::array<int, 3> key = rep;
        for (int a = 0; a < 3; ++a) key[a] = std::abs(key[a]);
        std::sort(key.begin(), key.begin() + d.n, std::greater<int>());
        // Re-associate sorted key with per-axis dims: dims are equal on all
        // axes so sorting is a symmetry of the torus.
        auto it = canon.find(key);
        std::array<double, 3> entry;
        if (it != canon.end()) {
          entry = it->second;
        } else {
          double latticeSum = 0.0;
          std::array<int, 3> m{0, 0, 0};
          std::function<void(int)> img = [&](int axis) {
            if (axis == d.n) {
              std::array<int, 3> v{0, 0, 0};
              for (int a = 0; a < d.n; ++a) v[a] = key[a] + m[a] * d.dims[a];
              latticeSum += jc.get(v);
              return;
            }
            for (int mm = -C; mm <= C; ++mm) {
              m[axis] = mm;
              img(axis + 1);
            }
          };
          img(0);
          std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0}, x0{0, 0, 0};
          for (int a = 0; a < d.n; ++a) {
            lo[a] = key[a] - (C + 0.5) * d.dims[a];
            hi[a] = key[a] + (C + 0.5) * d.dims[a];
          }
          double tailCorr =
              power_outside_box(d.n, d.s, lo, hi, x0) / volLattice;
          double resid = cEng * (double)maxDim * maxDim *
                         power_outside_box(d.n, d.s + 2.0, lo, hi, x0) /
                         volLattice;
          entry = {latticeSum, tailCorr, resid};
          canon.emplace(key, entry);
        }
        double val = hpow * (entry[0] + entry[1]);
        double bound = hpow * entry[2];
        k.Kconv[i] = val;
        k.tailBound = std::max(k.tailBound, bound);
        worstRatio = std::max(worstRatio, bound / val);
        if (bound > opts.tailTolerance * val) ok = false;
      }
      if (ok || !opts.autoRaiseCutoff || C >= 15) {
        if (!ok && !opts.autoRaiseCutoff)
          throw std::runtime_error(
              "periodization tail bound not achievable at requested cutoff");
        if (!ok)
          throw std::runtime_error(
              "periodization tail bound not achievable (cutoff 15)");
        k.opts.latticeCutoff = C;
        break;
      }
      C += 2;
      k.tailBound = 0.0;
    }
  }

  k.fft = std::make_shared<FftGrid>(k.convDims, d.n);
  k.Khat = k.fft->forward(k.Kconv);

  if (d.mode == Mode::Periodic) {
    double rs = 0.0;
    for (double v : k.Kconv) rs += v;
    k.rowSum.assign(d.cells(), rs);
  } else {
    std::vector<double> ones(d.cells(), 1.0);
    k.rowSum = k.correlate(ones);
    // Far-field weights: integral over each cell of the kernel mass outside
    // the box, cached over the cube symmetry group.
    k.wFar.assign(d.cells(), 0.0);
    double h = d.cellSize, L = d.L;
    if (d.n == 1) {
      double is = 1.0 / (d.s * (1.0 - d.s));
      for (int i = 0; i < d.dims[0]; ++i) {
        double a = i * h, b = a + h;
        k.wFar[i] = is * ((std::pow(b, 1.0 - d.s) - std::pow(a, 1.0 - d.s)) +
                          (std::pow(L - a, 1.0 - d.s) -
                           std::pow(L - b, 1.0 - d.s)));
      }
    } else {
      std::array<double, 3> blo{0, 0, 0}, bhi{0, 0, 0};
      for (int a = 0; a < d.n; ++a) bhi[a] = L;
      auto G = [&](const std::array<double, 3>& x) {
        return power_outside_box(d.n, d.s, blo, bhi, x);
      };
      std::map<std::array<int, 3>, double> cache;
      for (int i = 0; i < d.cells(); ++i) {
        auto c = d.coords(i);
        std::array<int, 3> key{0, 0, 0};
        int layer = d.dims[0];
        for (int a = 0; a < d.n; ++a) {
          key[a] = std::min(c[a], d.dims[a] - 1 - c[a]);
          layer = std::min(layer, key[a]);
        }
        std::sort(key.begin(), key.begin() + d.n);
        auto it = cache.find(key);
        if (it != cache.end()) {
          k.wFar[i] = it->second;
          continue;
        }
        std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
        for (int a = 0; a < d.n; ++a) {
          lo[a] = key[a] * h;
          hi[a] = lo[a] + h;
        }
        double v;
        if (layer >= 2) {
          // interior: fixed-order rule is plenty
          const auto& xs = gl_nodes(4);
          const auto& ws = gl_weights(4);
          v = 0.0;
          std::array<double, 3> p{0, 0, 0};
          int m1 = (d.n > 1) ? 4 : 1, m2 = (d.n > 2) ? 4 : 1;
          for (int i0 = 0; i0 < 4; ++i0) {
            p[0] = 0.5 * (lo[0] + hi[0]) + 0.5 * h * xs[i0];
            for (int i1 = 0; i1 < m1; ++i1) {
              if (d.n > 1) p[1] = 0.5 * (lo[1] + hi[1]) + 0.5 * h * xs[i1];
              for (int i2 = 0; i2 < m2; ++i2) {
                if (d.n > 2) p[2] = 0.5 * (lo[2] + hi[2]) + 0.5 * h * xs[i2];
                double w = ws[i0] * 0.5 * h;
                if (d.n > 1) w *= ws[i1] * 0.5 * h;
                if (d.n > 2) w *= ws[i2] * 0.5 * h;
                v += w * G(p);
              }
            }
          }
        } else {
          v = integrate_box(d.n, lo, hi, G, 1e-7, 0.0);
        }
        cache.emplace(key, v);
        k.wFar[i] = v;
      }
    }
  }
  return k;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_kernel_file(const KernelTensor& k, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  const auto& d = k.domain;
  f << "FCLK 1\n"
    << "n " << d.n << "\ndims";
  for (int a = 0; a < d.n; ++a) f << " " << d.dims[a];
  f << "\nL " << fmt17(d.L) << "\ns " << fmt17(d.s) << "\nmode "
    << mode_name(d.mode) << "\ncutoff " << k.opts.latticeCutoff << "\ntail "
    << fmt17(k.tailBound) << "\n\n";
  auto dump = [&](const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  };
  dump(k.Kconv);
  dump(k.rowSum);
  if (d.mode == Mode::Free) dump(k.wFar);
}

KernelTensor read_kernel_file(const std::string& path,
                              const DomainSpec& expect) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "FCLK 1")
    throw std::invalid_argument("bad magic, expected 'FCLK 1'");
  int n = 0, cutoff = 0;
  std::vector<int> dims;
  double L = 0, s = 0, tail = 0;
  Mode mode = Mode::Periodic;
  while (std::getline(f, line) && !line.empty()) {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "n")
      is >> n;
    else if (key == "dims") {
      int v;
      while (is >> v) dims.push_back(v);
    } else if (key == "L")
      is >> L;
    else if (key == "s")
      is >> s;
    else if (key == "mode") {
      std::string m;
      is >> m;
      mode = parse_mode(m);
    } else if (key == "cutoff")
      is >> cutoff;
    else if (key == "tail")
      is >> tail;
    else
      throw std::invalid_argument("unknown header key: " + key);
  }
  DomainSpec d = make_domain(n, dims, L, mode, s);
  if (!(d == expect))
    throw std::invalid_argument("kernel cache domain mismatch");
  KernelTensor k;
  k.domain = d;
  k.opts.latticeCutoff = cutoff;
  k.tailBound = tail;
  for (int a = 0; a < 3; ++a)
    k.convDims[a] = (a < d.n) ? (mode == Mode::Free ? 2 * d.dims[a] : d.dims[a])
                              : 1;
  long long convTotal = (long long)k.convDims[0] * k.convDims[1] * k.convDims[2];
  auto slurp = [&](std::vector<double>& v, long long count) {
    v.resize(count);
    f.read(reinterpret_cast<char*>(v.data()), count * sizeof(double));
    if (!f) throw std::invalid_argument("truncated payload");
  };
  slurp(k.Kconv, convTotal);
  slurp(k.rowSum, d.cells());
  if (mode == Mode::Free) slurp(k.wFar, d.cells());
  k.fft = std::make_shared<FftGrid>(k.convDims, d.n);
  k.Khat = k.fft->forward(k.Kconv);
  return k;
}

}  // namespace fcl
