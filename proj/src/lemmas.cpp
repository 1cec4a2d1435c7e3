#include "fcl/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fcl/distance_transform.hpp"
#include "fcl/fft.hpp"
#include "fcl/quadrature.hpp"

namespace fcl {

double omega_n(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return M_PI;
    case 3: return 4.0 * M_PI / 3.0;
  }
  throw std::invalid_argument("omega_n: n must be 1..3");
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Kernel mass outside the unit ball seen from radius rho: (1/s) * angular
// integral of R(rho, alpha)^{-s}, R the exit distance along the direction at
// angle alpha from the outward radial axis.
// w = 1 - rho, carried separately so the boundary layer survives rounding
double ball_shell_weight(int n, double s, double w, int panelOrder) {
  double rho = 1.0 - w;
  // exit distance, written without cancellation:
  // R = w(2-w) / (sqrt(cos^2 + w(2-w) sin^2) + (1-w) cos)
  auto R = [rho, w](double cosA, double sinA) {
    double q = w * (2.0 - w);
    double root = std::sqrt(cosA * cosA + q * sinA * sinA);
    if (cosA < 0.0) return root - rho * cosA;  // both terms positive
    return q / (root + rho * cosA);
  };
  auto f = [&](double alpha) {
    double c = std::cos(alpha), sn = std::sin(alpha);
    double r = R(c, sn);
    double v = std::pow(r, -s);
    if (n == 3) v *= 2.0 * M_PI * sn;
    else v *= 2.0;  // n == 2: both signs of alpha
    return v;
  };
  // graded panels toward alpha = 0 where the integrand peaks as rho -> 1
  w = std::max(w, 1e-100);
  std::vector<double> cuts{0.0};
  double a = std::min(w, M_PI);
  while (a < M_PI) {
    cuts.push_back(a);
    a *= 2.0;
  }
  cuts.push_back(M_PI);
  const auto& xs = gl_nodes(panelOrder);
  const auto& ws = gl_weights(panelOrder);
  double sum = 0.0;
  for (size_t p = 0; p + 1 < cuts.size(); ++p) {
    double mid = 0.5 * (cuts[p] + cuts[p + 1]);
    double half = 0.5 * (cuts[p + 1] - cuts[p]);
    for (size_t i = 0; i < xs.size(); ++i)
      sum += ws[i] * half * f(mid + half * xs[i]);
  }
  return sum / s;
}

double ball_perimeter_once(int n, double s, int res) {
  // radial substitution rho = 1 - u^{1/(1-s)} flattens the boundary layer
  const auto& xs = gl_nodes(res);
  const auto& ws = gl_weights(res);
  double sum = 0.0;
  for (int i = 0; i < res; ++i) {
    double u = 0.5 * (1.0 + xs[i]);
    double wu = 0.5 * ws[i];
    double w = std::pow(u, 1.0 / (1.0 - s));
    double rho = 1.0 - w;
    double jac = std::pow(u, s / (1.0 - s)) / (1.0 - s);
    if (w >= 1.0 || rho <= 0.0) continue;
    double g = ball_shell_weight(n, s, w, 16);
    sum += wu * std::pow(rho, n - 1) * g * jac;
  }
  return n * omega_n(n) * sum;
}

}  // namespace

double ball_perimeter_s(int n, double s, int resolution, double* errEstimate) {
  if (n == 1) {
    if (errEstimate) *errEstimate = 0.0;
    return std::pow(2.0, 1.0 - s) * 2.0 / (s * (1.0 - s));
  }
  double v1 = ball_perimeter_once(n, s, resolution);
  double v2 = ball_perimeter_once(n, s, 2 * resolution);
  if (errEstimate) *errEstimate = std::abs(v2 - v1);
  return v2;
}

EstimateConstants estimate_constants(int n, double s, int N, double Lambda,
                               double r0, double xi) {
  if (n < 1 || n > 3 || !(s > 0 && s < 1) || N < 1 || Lambda < 0 || !(r0 > 0))
    throw std::invalid_argument("estimate_constants: invalid inputs");
  EstimateConstants pc;
  pc.n = n;
  pc.s = s;
  pc.N = N;
  pc.Lambda = Lambda;
  pc.r0 = r0;
  if (xi <= 0.0) xi = (n == 1) ? 2.0 : (n == 2 ? 19.0 : 87.0);
  pc.xi = xi;
  pc.ballVolume = omega_n(n);
  pc.ballPerimeter = n * omega_n(n);
  pc.PsB = ball_perimeter_s(n, s, 64);
  double B = pc.ballVolume, PB = pc.ballPerimeter, PsB = pc.PsB;
  double Bpow = std::pow(B, (n - s) / n);
  pc.C1 = std::pow(2.0, 1.0 + (n - s) / s) *
          std::pow(4.0 * Bpow * PB / (s * (1.0 - s) * PsB), 1.0 / s);
  pc.C2 = 2.0 * Bpow / ((1.0 - s) * PsB);
  pc.chi1 = (1.0 - s) * PsB / (4.0 * Bpow * xi);
  pc.chi2 = std::pow(2.0, 3.0 + n / s) * Bpow * PB / (s * (1.0 - s) * PsB);
  pc.r1 = Lambda > 0.0
              ? std::min(r0, std::pow((1.0 - s) * PsB / (N * Lambda * B),
                                      1.0 / s))
              : r0;
  pc.c0 = std::pow(
      s * (1.0 - s) * PsB /
          (4.0 * (N + 1) * B * std::pow(2.0, (double)n / s) * PB),
      (double)n / s);
  pc.sigma0 = pc.c0 * B;
  pc.C0 = (2.0 * N + 1.0) * PsB +
          2.0 * Lambda * omega_n(n) * std::pow(r0, s) / (1.0 - s);
  return pc;
}

std::string CheckReport::to_json() const {
  std::ostringstream os;
  os << "{\"check\": \"" << name << "\", \"pass\": " << (pass ? "true" : "false")
     << ", \"diagnostic\": " << (diagnostic ? "true" : "false")
     << ", \"tolerance\": " << fmt17(tolerance) << ", \"measured\": {";
  bool first = true;
  for (const auto& [k, v] : measured) {
    os << (first ? "" : ", ") << "\"" << k << "\": " << fmt17(v);
    first = false;
  }
  os << "}, \"bounds\": {";
  first = true;
  for (const auto& [k, v] : bounds) {
    os << (first ? "" : ", ") << "\"" << k << "\": " << fmt17(v);
    first = false;
  }
  os << "}, \"context\": \"" << context << "\"}";
  return os.str();
}

std::string reports_to_csv(const std::vector<CheckReport>& reports) {
  std::ostringstream os;
  os << "check,pass,tolerance,context,measured,bounds\n";
  for (const auto& r : reports) {
    os << r.name << "," << (r.pass ? 1 : 0) << "," << fmt17(r.tolerance) << ","
       << r.context << ",";
    bool first = true;
    for (const auto& [k, v] : r.measured) {
      os << (first ? "" : ";") << k << "=" << fmt17(v);
      first = false;
    }
    os << ",";
    first = true;
    for (const auto& [k, v] : r.bounds) {
      os << (first ? "" : ";") << k << "=" << fmt17(v);
      first = false;
    }
    os << "\n";
  }
  return os.str();
}

namespace {

double mask_volume(const Mask& m, const DomainSpec& d) {
  long long c = 0;
  for (auto v : m) c += v ? 1 : 0;
  return c * d.cellVolume();
}

// certified discrete distance/diameter between two cell sets
void cert_dist_diam(const DomainSpec& d, const Mask& A, const Mask& B,
                    double& dist, double& diam) {
  double h = d.cellSize;
  double slack = h * std::sqrt((double)d.n);
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
  std::vector<int> ia, ib;
  for (int i = 0; i < d.cells(); ++i) {
    if (A[i]) ia.push_back(i);
    if (B[i]) ib.push_back(i);
  }
  for (int i : ia) {
    auto xi = d.center(i);
    for (int j : ib) {
      auto xj = d.center(j);
      double r2 = 0.0;
      for (int a = 0; a < d.n; ++a) {
        double dd = xi[a] - xj[a];
        if (d.mode == Mode::Periodic) dd -= d.L * std::round(dd / d.L);
        r2 += dd * dd;
      }
      double r = std::sqrt(r2);
      mn = std::min(mn, r);
      mx = std::max(mx, r);
    }
  }
  dist = std::max(0.0, mn - slack);
  diam = mx + slack;
}

}  // namespace

CheckReport check_sandwich(const std::vector<Mask>& sets,
                           const KernelTensor& k) {
  CheckReport rep;
  rep.name = "sandwich";
  const auto& d = k.domain;
  int L = (int)sets.size();
  if (L < 2) throw std::invalid_argument("check_sandwich: need >= 2 sets");
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j)
      for (int c = 0; c < d.cells(); ++c)
        if (sets[i][c] && sets[j][c])
          throw std::invalid_argument("check_sandwich: sets overlap");

  std::vector<double> P(L), vol(L);
  for (int i = 0; i < L; ++i) {
    P[i] = perimeter(sets[i], k);
    vol[i] = mask_volume(sets[i], d);
  }
  double tol = 1e-9;
  bool pass = true;
  double worstSlack = std::numeric_limits<double>::infinity();
  // two-set sandwich for every pair
  for (int i = 0; i < L; ++i) {
    for (int j = i + 1; j < L; ++j) {
      Mask uni(d.cells());
      for (int c = 0; c < d.cells(); ++c) uni[c] = sets[i][c] || sets[j][c];
      double Pu = perimeter(uni, k);
      double I = interaction(sets[i], sets[j], k);
      double middle = P[i] + P[j] - 2.0 * I;
      double dist, diam;
      cert_dist_diam(d, sets[i], sets[j], dist, diam);
      double scale = P[i] + P[j];
      if (std::abs(Pu - middle) > tol * scale) pass = false;
      double upper = P[i] + P[j] -
                     2.0 * vol[i] * vol[j] * std::pow(diam, -(d.n + d.s));
      if (Pu > upper + tol * scale) pass = false;
      worstSlack = std::min(worstSlack, upper - Pu);
      if (dist > 0.0) {
        double lower = P[i] + P[j] -
                       2.0 * vol[i] * vol[j] * std::pow(dist, -(d.n + d.s));
        if (Pu < lower - tol * scale) pass = false;
        worstSlack = std::min(worstSlack, Pu - lower);
      }
    }
  }
  // L-set union lower bound
  Mask uni(d.cells(), 0);
  double sumP = 0.0, maxVol = 0.0;
  for (int i = 0; i < L; ++i) {
    sumP += P[i];
    maxVol = std::max(maxVol, vol[i]);
    for (int c = 0; c < d.cells(); ++c)
      if (sets[i][c]) uni[c] = 1;
  }
  double D = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) {
      double dist, diam;
      cert_dist_diam(d, sets[i], sets[j], dist, diam);
      D = std::min(D, dist);
    }
  double Puni = perimeter(uni, k);
  double lowerL = -std::numeric_limits<double>::infinity();
  if (D > 0.0)
    lowerL = sumP - 2.0 * L * L * maxVol * maxVol * std::pow(D, -(d.n + d.s));
  if (Puni < lowerL - 1e-9 * sumP) pass = false;
  rep.pass = pass;
  rep.tolerance = tol;
  rep.measured["unionPerimeter"] = Puni;
  rep.measured["sumPerimeters"] = sumP;
  rep.measured["minCertDist"] = D;
  rep.measured["worstPairSlack"] = worstSlack;
  rep.bounds["unionLowerBound"] = lowerL;
  rep.context = std::to_string(L) + " sets";
  return rep;
}

CheckReport check_isoperimetric(const Mask& E, const KernelTensor& k,
                                double PsB, double tol) {
  CheckReport rep;
  rep.name = "isoperimetric";
  const auto& d = k.domain;
  double vol = mask_volume(E, d);
  if (!(vol > 0.0))
    throw std::invalid_argument("check_isoperimetric: empty set");
  // On the torus a set does not interact with its own periodic images, so
  // its relative perimeter sits below the whole-space value and the ball
  // bound does not apply verbatim. Compare against the whole-space
  // perimeter of the same union of cells instead.
  double P;
  if (d.mode == Mode::Periodic) {
    // pad by one empty layer: free mode keeps the outer layer clear
    int ext = d.dims[0] + 2;
    static std::map<std::array<double, 4>, KernelTensor> cache;
    static std::mutex mu;
    std::array<double, 4> key{(double)d.n, (double)ext, d.cellSize, d.s};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<int> dims(d.n, ext);
      auto df = make_domain(d.n, dims, ext * d.cellSize, Mode::Free, d.s);
      it = cache.emplace(key, build_kernel(df)).first;
    }
    const auto& df = it->second.domain;
    Mask Ef(df.cells(), 0);
    for (int i = 0; i < d.cells(); ++i) {
      if (!E[i]) continue;
      auto c = d.coords(i);
      for (int a = 0; a < d.n; ++a) c[a] += 1;
      Ef[df.index(c)] = 1;
    }
    P = perimeter(Ef, it->second);
  } else {
    P = perimeter(E, k);
  }
  double B = omega_n(d.n);
  double rhs = PsB * std::pow(B, (d.s - d.n) / d.n) *
               std::pow(vol, (d.n - d.s) / d.n);
  rep.pass = P >= (1.0 - tol) * rhs;
  rep.tolerance = tol;
  rep.measured["perimeter"] = P;
  rep.measured["deficit"] = P / rhs - 1.0;
  rep.bounds["ballBound"] = rhs;
  rep.context = "volume " + std::to_string(vol);
  return rep;
}

namespace {

// count of mask cells whose centers lie within radius r of each cell center
std::vector<long long> ball_counts(const DomainSpec& d, const Mask& mask,
                                   double r) {
  std::array<int, 3> cd{1, 1, 1};
  for (int a = 0; a < d.n; ++a)
    cd[a] = d.mode == Mode::Periodic ? d.dims[a] : 2 * d.dims[a];
  long long total = (long long)cd[0] * cd[1] * cd[2];
  std::vector<double> stencil(total, 0.0), field(total, 0.0);
  double h = d.cellSize;
  // stencil over offsets
  std::array<int, 3> delta{0, 0, 0};
  std::function<void(int)> fill = [&](int axis) {
    if (axis == d.n) {
      double r2 = 0.0;
      for (int a = 0; a < d.n; ++a) r2 += (double)delta[a] * delta[a];
      if (r2 * h * h <= r * r * (1.0 + 1e-12)) {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = 0; a < d.n; ++a) idx[a] = ((delta[a] % cd[a]) + cd[a]) % cd[a];
        stencil[(idx[0] * (long long)cd[1] + idx[1]) * cd[2] + idx[2]] = 1.0;
      }
      return;
    }
    int ext = d.mode == Mode::Periodic ? d.dims[axis] / 2 : d.dims[axis] - 1;
    for (int v = -ext; v <= ext; ++v) {
      delta[axis] = v;
      fill(axis + 1);
    }
  };
  fill(0);
  for (int i = 0; i < d.cells(); ++i) {
    if (!mask[i]) continue;
    auto c = d.coords(i);
    field[(c[0] * (long long)cd[1] + c[1]) * cd[2] + c[2]] = 1.0;
  }
  FftGrid fft(cd, d.n);
  auto sh = fft.forward(stencil);
  auto fh = fft.forward(field);
  for (size_t i = 0; i < sh.size(); ++i) sh[i] *= fh[i];
  auto conv = fft.inverse(sh);
  std::vector<long long> out(d.cells());
  for (int i = 0; i < d.cells(); ++i) {
    auto c = d.coords(i);
    out[i] = std::llround(
        conv[(c[0] * (long long)cd[1] + c[1]) * cd[2] + c[2]]);
  }
  return out;
}

Mask ball_mask(const DomainSpec& d, const std::array<double, 3>& x, double r) {
  Mask m(d.cells(), 0);
  for (int i = 0; i < d.cells(); ++i) {
    auto c = d.center(i);
    double r2 = 0.0;
    for (int a = 0; a < d.n; ++a) {
      double dd = c[a] - x[a];
      if (d.mode == Mode::Periodic) dd -= d.L * std::round(dd / d.L);
      r2 += dd * dd;
    }
    if (r2 <= r * r) m[i] = 1;
  }
  return m;
}

bool is_interface_cell(const LabelGrid& g, int i) {
  const auto& d = g.domain;
  auto c = d.coords(i);
  for (int axis = 0; axis < d.n; ++axis) {
    for (int st = -1; st <= 1; st += 2) {
      auto cc = c;
      cc[axis] += st;
      if (cc[axis] < 0 || cc[axis] >= d.dims[axis]) {
        if (d.mode == Mode::Periodic)
          cc[axis] = (cc[axis] + d.dims[axis]) % d.dims[axis];
        else {
          if (g.labels[i] != 0) return true;
          continue;
        }
      }
      if (g.labels[d.index(cc)] != g.labels[i]) return true;
    }
  }
  return false;
}

}  // namespace

CheckReport check_density(const LabelGrid& g, int cell,
                          const std::vector<double>& radii,
                          const EstimateConstants& pc, double c0, double c1) {
  CheckReport rep;
  rep.name = "density";
  const auto& d = g.domain;
  if (!is_interface_cell(g, cell))
    throw std::invalid_argument("check_density: cell is not on the boundary");
  auto x = d.center(cell);
  double h = d.cellSize;
  double slackR = h * std::sqrt((double)d.n);
  // chambers meeting at this cell
  std::set<int> touching{g.labels[cell]};
  {
    auto c = d.coords(cell);
    for (int axis = 0; axis < d.n; ++axis)
      for (int st = -1; st <= 1; st += 2) {
        auto cc = c;
        cc[axis] += st;
        if (cc[axis] < 0 || cc[axis] >= d.dims[axis]) {
          if (d.mode == Mode::Periodic)
            cc[axis] = (cc[axis] + d.dims[axis]) % d.dims[axis];
          else {
            touching.insert(0);
            continue;
          }
        }
        touching.insert(g.labels[d.index(cc)]);
      }
  }
  bool pass = true;
  double worstLow = 1.0, worstHigh = 0.0;
  for (double r : radii) {
    Mask ball = ball_mask(d, x, r);
    double ballVol = omega_n(d.n) * std::pow(r, d.n);
    double fracSlack =
        (std::pow(r + slackR, d.n) - std::pow(std::max(0.0, r - slackR), d.n)) /
        std::pow(r, d.n);
    for (int hIdx : touching) {
      long long cnt = 0;
      for (int i = 0; i < d.cells(); ++i)
        if (ball[i] && g.labels[i] == hIdx) ++cnt;
      double frac = cnt * d.cellVolume() / ballVol;
      worstLow = std::min(worstLow, frac);
      worstHigh = std::max(worstHigh, frac);
      if (frac < c0 - fracSlack || frac > c1 + fracSlack) pass = false;
    }
  }
  rep.measured["minFraction"] = worstLow;
  rep.measured["maxFraction"] = worstHigh;
  rep.bounds["c0"] = c0;
  rep.bounds["c1"] = c1;
  rep.bounds["C0"] = pc.C0;
  rep.context = "cell " + std::to_string(cell);
  rep.pass = pass;
  rep.tolerance = slackR;
  return rep;
}

CheckReport check_infiltration(const LabelGrid& g, const EstimateConstants& pc,
                               const std::vector<double>& radii,
                               const KernelTensor& k) {
  (void)k;
  CheckReport rep;
  rep.name = "infiltration";
  const auto& d = g.domain;
  double h = d.cellSize;
  double slackR = h * std::sqrt((double)d.n);
  long long violations = 0, triggers = 0;
  double firstViolR = 0.0;
  int firstViolCell = -1;
  for (double r : radii) {
    if (r > pc.r1) continue;
    double rHalf = r / 2.0 - slackR;
    for (int hIdx = 0; hIdx <= g.N; ++hIdx) {
      Mask cm = chamber_mask(g, hIdx);
      auto cnt = ball_counts(d, cm, r);
      std::vector<long long> cntHalf;
      if (rHalf > 0.0) cntHalf = ball_counts(d, cm, rHalf);
      double thresh = pc.sigma0 * std::pow(r, d.n);
      for (int i = 0; i < d.cells(); ++i) {
        double vol = cnt[i] * d.cellVolume();
        if (vol > thresh) continue;
        ++triggers;
        long long inner = rHalf > 0.0 ? cntHalf[i] : (cm[i] ? 1 : 0);
        if (inner > 0) {
          ++violations;
          if (firstViolCell < 0) {
            firstViolCell = i;
            firstViolR = r;
          }
        }
      }
    }
  }
  rep.pass = violations == 0;
  rep.measured["violations"] = (double)violations;
  rep.measured["triggers"] = (double)triggers;
  rep.measured["firstViolationRadius"] = firstViolR;
  rep.bounds["sigma0"] = pc.sigma0;
  rep.bounds["r1"] = pc.r1;
  rep.tolerance = slackR;
  rep.context = firstViolCell >= 0
                    ? "first violation at cell " + std::to_string(firstViolCell)
                    : "clean scan";
  return rep;
}

NucleationResult nucleate(const Mask& E, double eps, const KernelTensor& k,
                          const EstimateConstants& pc) {
  const auto& d = k.domain;
  double vol = mask_volume(E, d);
  double P = perimeter(E, k);
  double epsMax = std::min(vol, (1.0 - pc.s) * P / (pc.chi1 * pc.chi2));
  if (!(eps > 0.0) || eps > epsMax)
    throw std::invalid_argument(
        "nucleate: eps must satisfy 0 < eps <= min{|E|, (1-s)Ps(E)/(chi1 chi2)}"
        " = " + std::to_string(epsMax));
  if (d.L < 4.0)
    throw std::invalid_argument("nucleate: box too small for unit balls");

  NucleationResult res;
  res.densityThreshold =
      std::pow(pc.chi1 * eps / ((1.0 - pc.s) * P), (double)d.n / d.s);
  res.cardinalityBound =
      vol * std::pow((1.0 - pc.s) * P / (pc.chi1 * eps), (double)d.n / d.s);
  auto cnt1 = ball_counts(d, E, 1.0);

  auto distTo = [&](int i, const std::array<double, 3>& p) {
    auto c = d.center(i);
    double r2 = 0.0;
    for (int a = 0; a < d.n; ++a) {
      double dd = c[a] - p[a];
      if (d.mode == Mode::Periodic) dd -= d.L * std::round(dd / d.L);
      r2 += dd * dd;
    }
    return std::sqrt(r2);
  };

  for (;;) {
    // residual volume outside the chosen B_2 balls
    long long residCells = 0;
    for (int i = 0; i < d.cells(); ++i) {
      if (!E[i]) continue;
      bool covered = false;
      for (const auto& p : res.points)
        if (distTo(i, p) <= 2.0) {
          covered = true;
          break;
        }
      if (!covered) ++residCells;
    }
    res.residual = residCells * d.cellVolume();
    if (res.residual < eps) break;
    // best admissible candidate
    int best = -1;
    long long bestCnt = -1;
    for (int i = 0; i < d.cells(); ++i) {
      bool admissible = true;
      for (const auto& p : res.points)
        if (distTo(i, p) <= 2.0) {
          admissible = false;
          break;
        }
      if (!admissible) continue;
      if (cnt1[i] > bestCnt) {
        bestCnt = cnt1[i];
        best = i;
      }
    }
    double bestVol = bestCnt * d.cellVolume();
    if (best < 0 || bestVol < res.densityThreshold)
      throw std::runtime_error(
          "nucleate: no admissible point reaches the density bound (best " +
          std::to_string(bestVol) + ")");
    res.points.push_back(d.center(best));
    if ((double)res.points.size() > res.cardinalityBound + 1.0)
      throw std::runtime_error("nucleate: cardinality bound exceeded");
  }
  return res;
}

TruncationResult truncate_cluster(const LabelGrid& g, const Mask& F,
                                  double tau, const KernelTensor& k,
                                  const EstimateConstants& pc) {
  const auto& d = g.domain;
  bool hasF = false;
  for (auto v : F)
    if (v) hasF = true;
  if (!hasF)
    throw std::invalid_argument("truncate_cluster: F must be nonempty");
  if (!(tau > 0.0)) throw std::invalid_argument("truncate_cluster: tau <= 0");
  auto u = distance_transform(d, F);
  double leak = 0.0;
  for (int i = 0; i < d.cells(); ++i)
    if (g.labels[i] >= 1 && u[i] > 0.0) leak += d.cellVolume();
  if (leak > tau)
    throw std::invalid_argument(
        "truncate_cluster: leaked volume exceeds tau (" +
        std::to_string(leak) + " > " + std::to_string(tau) + ")");

  double rmax = pc.C1 * std::pow(tau, 1.0 / d.n);
  TruncationResult res;
  res.truncated = g;

  std::set<double> levels{0.0};
  bool anyBeyond = false;
  for (int i = 0; i < d.cells(); ++i) {
    if (g.labels[i] < 1) continue;
    if (u[i] > rmax) anyBeyond = true;
    else levels.insert(u[i]);
  }
  double Ps = cluster_perimeter(g, k).total;
  if (!anyBeyond) {
    res.r0 = rmax;
    res.degenerate = true;
    res.lhs = (1.0 - d.s) * Ps;
    res.rhs = res.lhs;
    return res;
  }
  for (double r : levels) {
    LabelGrid gp = g;
    for (int i = 0; i < d.cells(); ++i)
      if (gp.labels[i] >= 1 && u[i] > r) gp.labels[i] = 0;
    double dist = relative_distance(g, gp);
    double lhs = (1.0 - d.s) * cluster_perimeter(gp, k).total;
    double rhs = (1.0 - d.s) * Ps - dist / (pc.C2 * std::pow(tau, d.s / d.n));
    if (lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs))) {
      res.r0 = r;
      res.truncated = gp;
      res.lhs = lhs;
      res.rhs = rhs;
      return res;
    }
  }
  throw std::runtime_error(
      "truncate_cluster: no radius in [0, C1 tau^{1/n}] satisfies the "
      "certificate (" + std::to_string(levels.size()) + " candidates scanned)");
}

CheckReport local_stability(const LabelGrid& g, double Lambda, double r0,
                            int trials, std::uint64_t seed,
                            const KernelTensor& k) {
  CheckReport rep;
  rep.name = "local-stability";
  const auto& d = g.domain;
  if (trials < 1) throw std::invalid_argument("local_stability: trials >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pickCell(0, d.cells() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double h = d.cellSize;
  double rmax = std::min(r0, d.L / 4.0);
  double minSlack = std::numeric_limits<double>::infinity();
  double lambdaMin = 0.0;
  bool pass = true;
  for (int t = 0; t < trials; ++t) {
    double rho = 2.0 * h + unif(rng) * std::max(1e-12, rmax - 2.0 * h);
    int c = pickCell(rng);
    auto x = d.center(c);
    Mask A = ball_mask(d, x, rho);
    // perturbation: relabel a random sub-ball strictly inside A
    double rin = rho * (0.2 + 0.6 * unif(rng));
    Mask sub = ball_mask(d, x, std::min(rin, rho - h * std::sqrt((double)d.n)));
    int target = (int)(unif(rng) * (g.N + 1));
    if (target > g.N) target = g.N;
    LabelGrid f = g;
    bool changed = false;
    for (int i = 0; i < d.cells(); ++i) {
      if (!sub[i]) continue;
      if (target != 0 && !(d.mode == Mode::Periodic || !d.onOuterLayer(i)))
        continue;
      if (f.labels[i] != target) {
        f.labels[i] = (std::uint8_t)target;
        changed = true;
      }
    }
    if (!changed) continue;
    double PsEA = cluster_relative_perimeter(g, A, k);
    double PsFA = cluster_relative_perimeter(f, A, k);
    double dist = relative_distance(g, f);
    double slack = PsFA + Lambda / (1.0 - d.s) * dist - PsEA;
    minSlack = std::min(minSlack, slack);
    if (dist > 0.0)
      lambdaMin = std::max(lambdaMin, (PsEA - PsFA) * (1.0 - d.s) / dist);
    if (slack < -1e-9 * std::max(1.0, PsEA)) pass = false;
  }
  rep.pass = pass;
  rep.tolerance = 1e-9;
  rep.measured["minSlack"] = minSlack;
  rep.measured["empiricalLambda"] = lambdaMin;
  rep.bounds["Lambda"] = Lambda;
  rep.context = std::to_string(trials) + " trials, r0 " + std::to_string(r0);
  return rep;
}

namespace {

// smallest-eigenvalue eigenvector of a symmetric matrix (n = 2 or 3)
std::array<double, 3> smallest_eigenvector(int n, double m[3][3]) {
  if (n == 1) return {1, 0, 0};
  if (n == 2) {
    double a = m[0][0], b = m[0][1], c = m[1][1];
    double tr = a + c, det = a * c - b * b;
    double lam = tr / 2.0 - std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    // rows of A - lam I give the eigenvector; take the better-conditioned one
    double vx1 = -b, vy1 = a - lam;
    double vx2 = c - lam, vy2 = -b;
    double n1 = std::hypot(vx1, vy1), n2 = std::hypot(vx2, vy2);
    double scale = std::max(std::abs(a), std::abs(c)) + std::abs(b);
    if (std::max(n1, n2) <= 1e-12 * std::max(1.0, scale))
      return a <= c ? std::array<double, 3>{1, 0, 0}
                    : std::array<double, 3>{0, 1, 0};
    if (n1 >= n2) return {vx1 / n1, vy1 / n1, 0};
    return {vx2 / n2, vy2 / n2, 0};
  }
  // Jacobi rotations
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  double a[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = m[i][j];
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-14) break;
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-18) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double cth = 1.0 / std::sqrt(t * t + 1.0), sth = t * cth;
        for (int i = 0; i < 3; ++i) {
          double aip = a[i][p], aiq = a[i][q];
          a[i][p] = cth * aip - sth * aiq;
          a[i][q] = sth * aip + cth * aiq;
        }
        for (int i = 0; i < 3; ++i) {
          double api = a[p][i], aqi = a[q][i];
          a[p][i] = cth * api - sth * aqi;
          a[q][i] = sth * api + cth * aqi;
        }
        for (int i = 0; i < 3; ++i) {
          double vip = v[i][p], viq = v[i][q];
          v[i][p] = cth * vip - sth * viq;
          v[i][q] = sth * vip + cth * viq;
        }
      }
    }
  }
  int mi = 0;
  for (int i = 1; i < 3; ++i)
    if (a[i][i] < a[mi][mi]) mi = i;
  return {v[0][mi], v[1][mi], v[2][mi]};
}

}  // namespace

BlowupReport blowup(const LabelGrid& g, int cell,
                    const std::vector<double>& scales) {
  const auto& d = g.domain;
  if (!is_interface_cell(g, cell))
    throw std::invalid_argument("blowup: cell is not on the boundary");
  BlowupReport rep;
  rep.center = d.center(cell);
  double h = d.cellSize;
  for (double r : scales) {
    if (r < 4.0 * h)
      throw std::invalid_argument("blowup: scale below resolution (4 cells)");
    BlowupScale bs;
    bs.r = r;
    Mask ball = ball_mask(d, rep.center, r);
    std::vector<long long> counts(g.N + 1, 0);
    long long total = 0;
    std::vector<std::array<double, 3>> bdPts;
    for (int i = 0; i < d.cells(); ++i) {
      if (!ball[i]) continue;
      ++counts[g.labels[i]];
      ++total;
      if (is_interface_cell(g, i)) {
        auto c = d.center(i);
        std::array<double, 3> rel{0, 0, 0};
        for (int a = 0; a < d.n; ++a) {
          double dd = c[a] - rep.center[a];
          if (d.mode == Mode::Periodic) dd -= d.L * std::round(dd / d.L);
          rel[a] = dd;
        }
        bdPts.push_back(rel);
      }
    }
    int top1 = 0, top2 = -1;
    for (int hh = 1; hh <= g.N; ++hh)
      if (counts[hh] > counts[top1]) top1 = hh;
    for (int hh = 0; hh <= g.N; ++hh) {
      if (hh == top1) continue;
      if (top2 < 0 || counts[hh] > counts[top2]) top2 = hh;
    }
    bs.chamberA = top1;
    bs.chamberB = top2;
    bs.occupancy =
        total > 0 ? (double)(counts[top1] + counts[top2]) / (double)total : 0.0;
    // least-squares plane through the boundary points
    if (!bdPts.empty() && d.n >= 2) {
      std::array<double, 3> mean{0, 0, 0};
      for (const auto& p : bdPts)
        for (int a = 0; a < d.n; ++a) mean[a] += p[a];
      for (int a = 0; a < d.n; ++a) mean[a] /= (double)bdPts.size();
      double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
      for (const auto& p : bdPts)
        for (int a = 0; a < d.n; ++a)
          for (int b = 0; b < d.n; ++b)
            cov[a][b] += (p[a] - mean[a]) * (p[b] - mean[b]);
      auto nrm = smallest_eigenvector(d.n, cov);
      double maxDist = 0.0;
      for (const auto& p : bdPts) {
        double dd = 0.0;
        for (int a = 0; a < d.n; ++a) dd += (p[a] - mean[a]) * nrm[a];
        maxDist = std::max(maxDist, std::abs(dd));
      }
      // a perfectly flat discrete interface still scatters by up to half a
      // cell diagonal; do not count that floor as curvature
      double floor0 = 0.5 * h * std::sqrt((double)d.n);
      bs.flatness = std::max(0.0, maxDist - floor0) / r;
    } else {
      bs.flatness = 0.0;
    }
    rep.scales.push_back(bs);
  }
  // classification from the two smallest scales
  auto sorted = rep.scales;
  std::sort(sorted.begin(), sorted.end(),
            [](const BlowupScale& a, const BlowupScale& b) { return a.r < b.r; });
  if (sorted.size() >= 2) {
    const auto& s0 = sorted[0];
    const auto& s1 = sorted[1];
    if (s0.occupancy >= 0.98 && s1.occupancy >= 0.98 && s0.flatness <= 0.1 &&
        s1.flatness <= 0.1)
      rep.classification = "regular-like";
    else if (s0.occupancy <= 0.9)
      rep.classification = "singular-like";
    else
      rep.classification = "inconclusive";
  } else {
    rep.classification = "inconclusive";
  }
  return rep;
}

}  // namespace fcl
