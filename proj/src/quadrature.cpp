#include "fcl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fcl {

namespace {

struct GlRule {
  std::vector<double> x, w;
};

GlRule compute_gl(int m) {
  GlRule r;
  r.x.resize(m);
  r.w.resize(m);
  for (int i = 0; i < m; ++i) {
    // Newton iteration from the Chebyshev-like initial guess.
    double t = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = m * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= m; ++k) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = m * (t * p1 - p0) / (t * t - 1.0);
    r.x[i] = t;
    r.w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  return r;
}

std::mutex glMutex;
std::map<int, GlRule> glCache;

const GlRule& gl_rule(int m) {
  std::lock_guard<std::mutex> lock(glMutex);
  auto it = glCache.find(m);
  if (it == glCache.end()) it = glCache.emplace(m, compute_gl(m)).first;
  return it->second;
}

using BoxFn = std::function<double(const std::array<double, 3>&)>;

double gl_box(int n, const std::array<double, 3>& lo,
              const std::array<double, 3>& hi, const BoxFn& f, int order) {
  const GlRule& g = gl_rule(order);
  std::array<double, 3> mid{0, 0, 0}, half{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    mid[a] = 0.5 * (lo[a] + hi[a]);
    half[a] = 0.5 * (hi[a] - lo[a]);
  }
  double sum = 0.0;
  std::array<int, 3> idx{0, 0, 0};
  std::array<double, 3> p{0, 0, 0};
  // Tensor loop over up to three axes.
  int m0 = order, m1 = (n > 1) ? order : 1, m2 = (n > 2) ? order : 1;
  for (int i0 = 0; i0 < m0; ++i0) {
    p[0] = mid[0] + half[0] * g.x[i0];
    double w0 = g.w[i0] * half[0];
    for (int i1 = 0; i1 < m1; ++i1) {
      double w1 = w0;
      if (n > 1) {
        p[1] = mid[1] + half[1] * g.x[i1];
        w1 *= g.w[i1] * half[1];
      }
      for (int i2 = 0; i2 < m2; ++i2) {
        double w2 = w1;
        if (n > 2) {
          p[2] = mid[2] + half[2] * g.x[i2];
          w2 *= g.w[i2] * half[2];
        }
        sum += w2 * f(p);
      }
    }
  }
  (void)idx;
  return sum;
}

double adapt_box(int n, const std::array<double, 3>& lo,
                 const std::array<double, 3>& hi, const BoxFn& f, double relTol,
                 double absTol, int depth) {
  double coarse = gl_box(n, lo, hi, f, 6);
  // Refined estimate: bisect every axis.
  double fine = 0.0;
  int parts = 1 << n;
  for (int b = 0; b < parts; ++b) {
    std::array<double, 3> l = lo, h = hi;
    for (int a = 0; a < n; ++a) {
      double m = 0.5 * (lo[a] + hi[a]);
      if (b & (1 << a))
        l[a] = m;
      else
        h[a] = m;
    }
    fine += gl_box(n, l, h, f, 6);
  }
  double err = std::abs(fine - coarse);
  if (err <= std::max(absTol, relTol * std::abs(fine)) || depth >= 12)
    return fine;
  double out = 0.0;
  for (int b = 0; b < parts; ++b) {
    std::array<double, 3> l = lo, h = hi;
    for (int a = 0; a < n; ++a) {
      double m = 0.5 * (lo[a] + hi[a]);
      if (b & (1 << a))
        l[a] = m;
      else
        h[a] = m;
    }
    out += adapt_box(n, l, h, f, relTol, absTol / parts, depth + 1);
  }
  return out;
}

double tent(double d, double t) {
  double v = 1.0 - std::abs(t - d);
  return v > 0.0 ? v : 0.0;
}

}  // namespace

const std::vector<double>& gl_nodes(int order) { return gl_rule(order).x; }
const std::vector<double>& gl_weights(int order) { return gl_rule(order).w; }

double integrate_box(int n, const std::array<double, 3>& lo,
                     const std::array<double, 3>& hi, const BoxFn& f,
                     double relTol, double absTol) {
  return adapt_box(n, lo, hi, f, relTol, absTol, 0);
}

namespace {

// Integral over the first dyadic shell [0,1]^n minus [0,1/2]^n of the
// homogeneous integrand prod_{a in M} t_a * |t|^{-n-s}.
double first_shell_integral(int n, double s, unsigned M) {
  BoxFn g = [n, s, M](const std::array<double, 3>& t) {
    double w = 1.0, r2 = 0.0;
    for (int a = 0; a < n; ++a) {
      if (M & (1u << a)) w *= t[a];
      r2 += t[a] * t[a];
    }
    return w * std::pow(r2, -0.5 * (n + s));
  };
  double sum = 0.0;
  int parts = 1 << n;
  for (int b = 1; b < parts; ++b) {  // b = 0 is the inner corner box, skipped
    std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      if (b & (1 << a)) {
        lo[a] = 0.5;
        hi[a] = 1.0;
      } else {
        lo[a] = 0.0;
        hi[a] = 0.5;
      }
    }
    sum += adapt_box(n, lo, hi, g, 1e-11, 1e-15, 0);
  }
  return sum;
}

// Panel of the tent-weighted kernel integral cornered at the origin. There
// every axis interval is [0,1] or [-1,0], so after reflection the tent
// factors are exactly t_a (axes with |d_a| = 1) and 1 - t_a (axes with
// d_a = 0). Expanding prod(1 - t_a) gives homogeneous terms whose dyadic
// shell sums are exact geometric series.
double singular_corner(int n, double s, const std::array<int, 3>& d) {
  unsigned S = 0, Z = 0;
  for (int a = 0; a < n; ++a) {
    if (std::abs(d[a]) == 1)
      S |= 1u << a;
    else if (d[a] == 0)
      Z |= 1u << a;
    else
      throw std::logic_error("corner panel requires |d_a| <= 1 on all axes");
  }
  if (S == 0) throw std::logic_error("divergent cell-pair integral");
  double total = 0.0;
  // Iterate over subsets T of Z.
  unsigned T = 0;
  while (true) {
    unsigned M = S | T;
    int mBits = __builtin_popcount(M);
    int tBits = __builtin_popcount(T);
    double lambda = std::pow(2.0, -(mBits - s));
    double term = first_shell_integral(n, s, M) / (1.0 - lambda);
    total += (tBits % 2 == 0) ? term : -term;
    if (T == Z) break;
    T = (T - Z) & Z;  // next subset of Z
  }
  return total;
}

}  // namespace

double unit_offset_integral(int n, double s, const std::array<int, 3>& delta) {
  bool allZero = true;
  for (int a = 0; a < n; ++a)
    if (delta[a] != 0) allZero = false;
  if (allZero) throw std::invalid_argument("zero offset is divergent");

  if (n == 1) {
    // Second difference of the antiderivative H with H'' = |t|^{-1-s}.
    auto H = [&](double t) {
      return -std::pow(std::abs(t), 1.0 - s) / (s * (1.0 - s));
    };
    double d = std::abs((double)delta[0]);
    return H(d + 1.0) - 2.0 * H(d) + H(d - 1.0);
  }

  std::array<int, 3> d{0, 0, 0};
  for (int a = 0; a < n; ++a) d[a] = std::abs(delta[a]);  // J is even per axis

  BoxFn f = [n, s, d](const std::array<double, 3>& t) {
    double w = 1.0, r2 = 0.0;
    for (int a = 0; a < n; ++a) {
      w *= tent(d[a], t[a]);
      r2 += t[a] * t[a];
    }
    if (w <= 0.0) return 0.0;
    return w * std::pow(r2, -0.5 * (n + s));
  };

  int dmax = 0;
  for (int a = 0; a < n; ++a) dmax = std::max(dmax, d[a]);

  if (dmax >= 3) {
    // Smooth region: fixed-order rule per tent piece.
    int order = dmax >= 6 ? 4 : 6;
    double sum = 0.0;
    int parts = 1 << n;
    for (int b = 0; b < parts; ++b) {
      std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
      for (int a = 0; a < n; ++a) {
        if (b & (1 << a)) {
          lo[a] = d[a];
          hi[a] = d[a] + 1.0;
        } else {
          lo[a] = d[a] - 1.0;
          hi[a] = d[a];
        }
      }
      sum += gl_box(n, lo, hi, f, order);
    }
    return sum;
  }

  // Near field: split each axis at tent kinks and at 0, integrate panels;
  // panels cornered at the origin get the graded treatment.
  std::array<std::vector<double>, 3> cuts;
  for (int a = 0; a < n; ++a) {
    std::vector<double> c{(double)d[a] - 1.0, (double)d[a], (double)d[a] + 1.0};
    if (c.front() < 0.0 && 0.0 < c.back()) c.push_back(0.0);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    cuts[a] = c;
  }
  double sum = 0.0;
  std::array<int, 3> pick{0, 0, 0};
  while (true) {
    std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      lo[a] = cuts[a][pick[a]];
      hi[a] = cuts[a][pick[a] + 1];
    }
    bool cornerAtOrigin = true;
    for (int a = 0; a < n; ++a)
      if (lo[a] != 0.0 && hi[a] != 0.0) cornerAtOrigin = false;
    if (cornerAtOrigin)
      sum += singular_corner(n, s, d);
    else
      sum += adapt_box(n, lo, hi, f, 1e-9, 1e-13, 0);
    int a = 0;
    while (a < n) {
      if (++pick[a] + 1 < (int)cuts[a].size()) break;
      pick[a] = 0;
      ++a;
    }
    if (a == n) break;
  }
  return sum;
}

double outside_box_radial(int n, const std::array<double, 3>& lo,
                          const std::array<double, 3>& hi,
                          const std::array<double, 3>& x,
                          const std::function<double(double)>& tailQ,
                          double relTol) {
  for (int a = 0; a < n; ++a)
    if (!(lo[a] < x[a] && x[a] < hi[a]))
      throw std::invalid_argument("outside_box_radial: x must be inside box");
  if (n == 1) return tailQ(x[0] - lo[0]) + tailQ(hi[0] - x[0]);

  double total = 0.0;
  for (int axis = 0; axis < n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      double aF = side ? (hi[axis] - x[axis]) : (x[axis] - lo[axis]);
      // Integrate over the face: variables are the other axes.
      int o1 = (axis + 1) % n;
      int o2 = (axis + 2) % n;  // used only when n == 3
      if (n == 2) {
        BoxFn f = [&](const std::array<double, 3>& t) {
          double dy = t[0] - x[o1];
          double rho = std::sqrt(aF * aF + dy * dy);
          return std::pow(rho, -(double)n) * tailQ(rho);
        };
        std::array<double, 3> l{lo[o1], 0, 0}, h{hi[o1], 0, 0};
        total += aF * adapt_box(1, l, h, f, relTol, 0.0, 0);
      } else {
        BoxFn f = [&](const std::array<double, 3>& t) {
          double d1 = t[0] - x[o1];
          double d2 = t[1] - x[o2];
          double rho = std::sqrt(aF * aF + d1 * d1 + d2 * d2);
          return std::pow(rho, -(double)n) * tailQ(rho);
        };
        std::array<double, 3> l{lo[o1], lo[o2], 0}, h{hi[o1], hi[o2], 0};
        total += aF * adapt_box(2, l, h, f, relTol, 0.0, 0);
      }
    }
  }
  return total;
}

double outside_box_integral(int n, const std::array<double, 3>& lo,
                            const std::array<double, 3>& hi,
                            const std::array<double, 3>& x, double q,
                            double relTol) {
  auto tailQ = [q](double rho) { return std::pow(rho, -q) / q; };
  return outside_box_radial(n, lo, hi, x, tailQ, relTol);
}

}  // namespace fcl
