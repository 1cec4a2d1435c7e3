#include "fcl/energy.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fcl {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> mask_field(const Mask& m) {
  std::vector<double> f(m.size());
  for (size_t i = 0; i < m.size(); ++i) f[i] = m[i] ? 1.0 : 0.0;
  return f;
}

void check_size(const Mask& m, const KernelTensor& k, const char* what) {
  if ((int)m.size() != k.domain.cells())
    throw std::invalid_argument(std::string(what) + ": mask size mismatch");
}

}  // namespace

std::string EnergyBreakdown::to_json() const {
  std::ostringstream os;
  os << "{\"total\": " << fmt17(total) << ", \"perChamber\": [";
  for (size_t h = 0; h < perChamber.size(); ++h)
    os << (h ? ", " : "") << fmt17(perChamber[h]);
  os << "], \"pairwise\": [";
  for (size_t h = 0; h < pairwise.size(); ++h) {
    os << (h ? ", [" : "[");
    for (size_t j = 0; j < pairwise[h].size(); ++j)
      os << (j ? ", " : "") << fmt17(pairwise[h][j]);
    os << "]";
  }
  os << "]}";
  return os.str();
}

std::string EnergyBreakdown::to_csv() const {
  std::ostringstream os;
  os << "quantity,h,k,value\n";
  os << "total,,," << fmt17(total) << "\n";
  for (size_t h = 0; h < perChamber.size(); ++h)
    os << "perChamber," << h << ",," << fmt17(perChamber[h]) << "\n";
  for (size_t h = 0; h < pairwise.size(); ++h)
    for (size_t j = h + 1; j < pairwise[h].size(); ++j)
      os << "pairwise," << h << "," << j << "," << fmt17(pairwise[h][j])
         << "\n";
  return os.str();
}

double interaction(const Mask& E, const Mask& F, const KernelTensor& k) {
  check_size(E, k, "interaction");
  check_size(F, k, "interaction");
  for (size_t i = 0; i < E.size(); ++i)
    if (E[i] && F[i])
      throw std::invalid_argument("interaction: masks must be disjoint");
  auto v = k.correlate(mask_field(F));
  double sum = 0.0;
  for (size_t i = 0; i < E.size(); ++i)
    if (E[i]) sum += v[i];
  return sum;
}

double perimeter(const Mask& E, const KernelTensor& k) {
  check_size(E, k, "perimeter");
  const auto& d = k.domain;
  if (d.mode == Mode::Free) {
    for (int i = 0; i < d.cells(); ++i)
      if (E[i] && d.onOuterLayer(i))
        throw std::invalid_argument(
            "perimeter: free mode forbids sets touching the outer layer");
  }
  auto v = k.correlate(mask_field(E));
  double sum = 0.0;
  for (int i = 0; i < d.cells(); ++i) {
    if (!E[i]) continue;
    sum += k.rowSum[i] - v[i];
    if (d.mode == Mode::Free) sum += k.wFar[i];
  }
  return sum;
}

double relative_perimeter(const Mask& E, const Mask& omega,
                          const KernelTensor& k) {
  check_size(E, k, "relative_perimeter");
  check_size(omega, k, "relative_perimeter");
  const auto& d = k.domain;
  int M = d.cells();
  Mask eIn(M), eOut(M), cIn(M), cOut(M);
  for (int i = 0; i < M; ++i) {
    eIn[i] = E[i] && omega[i];
    eOut[i] = E[i] && !omega[i];
    cIn[i] = !E[i] && omega[i];
    cOut[i] = !E[i] && !omega[i];
  }
  auto vIn = k.correlate(mask_field(eIn));
  auto vOut = k.correlate(mask_field(eOut));
  double sum = 0.0;
  for (int i = 0; i < M; ++i) {
    if (cIn[i]) sum += vIn[i] + vOut[i];  // I(E cap O, Ec cap O) + I(E \ O, Ec cap O)
    if (cOut[i]) sum += vIn[i];           // I(E cap O, Ec \ O) in-box part
  }
  if (d.mode == Mode::Free) {
    for (int i = 0; i < M; ++i)
      if (eIn[i]) sum += k.wFar[i];  // far field belongs to Ec \ Omega
  }
  return sum;
}

EnergyBreakdown cluster_perimeter(const LabelGrid& g, const KernelTensor& k) {
  if (!(g.domain == k.domain))
    throw std::invalid_argument("cluster_perimeter: domain mismatch");
  validate_grid(g);
  const auto& d = g.domain;
  int M = d.cells(), N = g.N;
  std::vector<std::vector<double>> v(N + 1);
  std::vector<Mask> masks(N + 1);
  for (int h = 0; h <= N; ++h) {
    masks[h] = chamber_mask(g, h);
    v[h] = k.correlate(mask_field(masks[h]));
  }
  bool freeMode = d.mode == Mode::Free;
  EnergyBreakdown out;
  out.perChamber.assign(N + 1, 0.0);
  out.pairwise.assign(N + 1, std::vector<double>(N + 1, 0.0));
  for (int h = 0; h <= N; ++h) {
    double p = 0.0;
    if (h == 0 && freeMode) {
      // P_s of the exterior chamber equals P_s of the chamber union.
      for (int i = 0; i < M; ++i) {
        if (g.labels[i] == 0) continue;
        double vu = 0.0;
        for (int hh = 1; hh <= N; ++hh) vu += v[hh][i];
        p += k.rowSum[i] - vu + k.wFar[i];
      }
    } else {
      for (int i = 0; i < M; ++i) {
        if (g.labels[i] != h) continue;
        p += k.rowSum[i] - v[h][i];
        if (freeMode) p += k.wFar[i];
      }
    }
    out.perChamber[h] = p;
  }
  double tot = 0.0;
  for (int h = 0; h <= N; ++h) tot += out.perChamber[h];
  out.total = 0.5 * tot;
  for (int h = 0; h <= N; ++h) {
    for (int j = h + 1; j <= N; ++j) {
      double I = 0.0;
      for (int i = 0; i < M; ++i)
        if (masks[j][i]) I += v[h][i];
      if (h == 0 && freeMode) {
        for (int i = 0; i < M; ++i)
          if (masks[j][i]) I += k.wFar[i];
      }
      out.pairwise[h][j] = out.pairwise[j][h] = I;
    }
  }
  return out;
}

double cluster_relative_perimeter(const LabelGrid& g, const Mask& omega,
                                  const KernelTensor& k) {
  double sum = 0.0;
  for (int h = 0; h <= g.N; ++h) {
    Mask m = chamber_mask(g, h);
    if (h == 0 && g.domain.mode == Mode::Free) {
      // use the chamber union: same relative perimeter as the exterior
      for (size_t i = 0; i < m.size(); ++i) m[i] = g.labels[i] != 0;
    }
    sum += relative_perimeter(m, omega, k);
  }
  return 0.5 * sum;
}

std::vector<double> potential(const Mask& E, const KernelTensor& k) {
  check_size(E, k, "potential");
  return k.correlate(mask_field(E));
}

namespace {

void check_soft(const SoftCluster& sc, const KernelTensor& k) {
  if (!(sc.domain == k.domain))
    throw std::invalid_argument("soft cluster: domain mismatch");
  if ((int)sc.fields.size() != sc.N)
    throw std::invalid_argument("soft cluster: field count mismatch");
  const double tol = 1e-4;
  int M = sc.domain.cells();
  for (int i = 0; i < M; ++i) {
    double sum = 0.0;
    for (int h = 0; h < sc.N; ++h) {
      double u = sc.fields[h][i];
      if (u < -tol || u > 1.0 + tol)
        throw std::invalid_argument("soft cluster: field out of [0,1]");
      sum += u;
    }
    if (sum > 1.0 + tol)
      throw std::invalid_argument("soft cluster: cell mass exceeds 1");
  }
}

}  // namespace

double soft_energy(const SoftCluster& sc, const KernelTensor& k) {
  check_soft(sc, k);
  const auto& d = sc.domain;
  int M = d.cells();
  std::vector<double> u0(M, 1.0);
  for (int h = 0; h < sc.N; ++h)
    for (int i = 0; i < M; ++i) u0[i] -= sc.fields[h][i];
  auto quad = [&](const std::vector<double>& u) {
    auto Ku = k.correlate(u);
    double sum = 0.0;
    for (int i = 0; i < M; ++i) sum += u[i] * (k.rowSum[i] * u[i] - Ku[i]);
    return sum;
  };
  double total = quad(u0);
  for (int h = 0; h < sc.N; ++h) total += quad(sc.fields[h]);
  total *= 0.5;
  if (d.mode == Mode::Free) {
    for (int i = 0; i < M; ++i) {
      double mass = 0.0;
      for (int h = 0; h < sc.N; ++h) mass += sc.fields[h][i];
      total += k.wFar[i] * mass;
    }
  }
  return total;
}

std::vector<std::vector<double>> soft_gradient(const SoftCluster& sc,
                                               const KernelTensor& k) {
  check_soft(sc, k);
  const auto& d = sc.domain;
  int M = d.cells();
  std::vector<double> u0(M, 1.0);
  for (int h = 0; h < sc.N; ++h)
    for (int i = 0; i < M; ++i) u0[i] -= sc.fields[h][i];
  auto Ku0 = k.correlate(u0);
  std::vector<std::vector<double>> g(sc.N, std::vector<double>(M));
  for (int h = 0; h < sc.N; ++h) {
    auto Ku = k.correlate(sc.fields[h]);
    for (int i = 0; i < M; ++i) {
      double gh = (k.rowSum[i] * sc.fields[h][i] - Ku[i]) -
                  (k.rowSum[i] * u0[i] - Ku0[i]);
      if (d.mode == Mode::Free) gh += k.wFar[i];
      g[h][i] = gh;
    }
  }
  return g;
}

}  // namespace fcl
