#include "fcl/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fcl {

namespace {

bool cell_allowed(const DomainSpec& d, int i) {
  return d.mode == Mode::Periodic || !d.onOuterLayer(i);
}

// Euclidean projection of one cell's chamber values onto
// {u >= 0, sum u <= 1}.
void project_cell(std::vector<double>& u) {
  double sum = 0.0;
  bool neg = false;
  for (double v : u) {
    if (v < 0.0) neg = true;
    sum += std::max(v, 0.0);
  }
  if (sum <= 1.0) {
    if (neg)
      for (auto& v : u) v = std::max(v, 0.0);
    return;
  }
  // project onto the simplex {u >= 0, sum = 1}
  std::vector<double> srt = u;
  std::sort(srt.begin(), srt.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  int k = 0;
  for (size_t j = 0; j < srt.size(); ++j) {
    cum += srt[j];
    double t = (cum - 1.0) / (double)(j + 1);
    if (t < srt[j]) {
      theta = t;
      k = (int)j + 1;
    }
  }
  (void)k;
  for (auto& v : u) v = std::max(v - theta, 0.0);
}

}  // namespace

SoftCluster project_constraints(const SoftCluster& sc, const VolumeVector& m) {
  const auto& d = sc.domain;
  if ((int)m.size() != sc.N)
    throw std::invalid_argument("project_constraints: volume count mismatch");
  int M = d.cells();
  double vol = d.cellVolume();
  long long allowed = 0;
  for (int i = 0; i < M; ++i)
    if (cell_allowed(d, i)) ++allowed;
  double totalTarget = std::accumulate(m.begin(), m.end(), 0.0);
  for (double v : m)
    if (!(v > 0.0))
      throw std::invalid_argument("project_constraints: volumes must be > 0");
  if (totalTarget > allowed * vol * (1.0 + 1e-12))
    throw std::invalid_argument("project_constraints: infeasible volumes");

  SoftCluster out = sc;
  for (int h = 0; h < out.N; ++h)
    for (int i = 0; i < M; ++i)
      if (!cell_allowed(d, i)) out.fields[h][i] = 0.0;

  std::vector<double> cellU(out.N);
  double residual = 0.0;
  for (int sweep = 0; sweep < 50; ++sweep) {
    // cellwise feasibility
    for (int i = 0; i < M; ++i) {
      if (!cell_allowed(d, i)) continue;
      for (int h = 0; h < out.N; ++h) cellU[h] = out.fields[h][i];
      project_cell(cellU);
      for (int h = 0; h < out.N; ++h) out.fields[h][i] = cellU[h];
    }
    // per-chamber exact mass fix that preserves cell feasibility
    residual = 0.0;
    for (int h = 0; h < out.N; ++h) {
      double mass = 0.0;
      for (int i = 0; i < M; ++i) mass += out.fields[h][i];
      mass *= vol;
      double deficit = m[h] - mass;
      residual = std::max(residual, std::abs(deficit));
      if (std::abs(deficit) < 1e-15 * std::max(1.0, m[h])) continue;
      if (deficit < 0.0) {
        double scale = m[h] / mass;
        for (int i = 0; i < M; ++i) out.fields[h][i] *= scale;
      } else {
        double H = 0.0;
        for (int i = 0; i < M; ++i) {
          if (!cell_allowed(d, i)) continue;
          double s = 0.0;
          for (int g = 0; g < out.N; ++g) s += out.fields[g][i];
          H += std::max(0.0, 1.0 - s);
        }
        if (H <= 0.0) continue;  // next sweep frees headroom
        double add = deficit / vol / H;
        for (int i = 0; i < M; ++i) {
          if (!cell_allowed(d, i)) continue;
          double s = 0.0;
          for (int g = 0; g < out.N; ++g) s += out.fields[g][i];
          out.fields[h][i] += add * std::max(0.0, 1.0 - s);
        }
      }
    }
    if (residual <= 1e-13 * std::max(1.0, totalTarget)) break;
  }
  if (residual > 1e-10 * std::max(1.0, totalTarget))
    throw std::runtime_error(
        "project_constraints: sweeps did not converge, residual " +
        std::to_string(residual));
  return out;
}

LabelGrid binarize(const SoftCluster& sc) {
  LabelGrid g;
  g.domain = sc.domain;
  g.N = sc.N;
  int M = sc.domain.cells();
  g.labels.assign(M, 0);
  for (int i = 0; i < M; ++i) {
    double u0 = 1.0;
    for (int h = 0; h < sc.N; ++h) u0 -= sc.fields[h][i];
    double best = u0;
    int lab = 0;
    for (int h = 0; h < sc.N; ++h) {
      if (sc.fields[h][i] > best) {
        best = sc.fields[h][i];
        lab = h + 1;
      }
    }
    if (lab >= 1 && !cell_allowed(sc.domain, i)) lab = 0;
    g.labels[i] = (std::uint8_t)lab;
  }
  return g;
}

namespace {

// Incrementally maintained chamber potentials v_h = K * 1_{E_h}.
struct Potentials {
  const KernelTensor* k;
  std::vector<std::vector<double>> v;  // h = 0..N

  void init(const LabelGrid& g) {
    v.assign(g.N + 1, {});
    for (int h = 0; h <= g.N; ++h) {
      std::vector<double> f(g.labels.size(), 0.0);
      for (size_t i = 0; i < g.labels.size(); ++i)
        if (g.labels[i] == h) f[i] = 1.0;
      v[h] = k->correlate(f);
    }
  }
  // energy change when cell i is relabeled a -> b
  double flip_delta(const LabelGrid& g, int i, int a, int b) const {
    double dE = v[a][i] - v[b][i];
    if (g.domain.mode == Mode::Free) {
      if (a == 0 && b != 0) dE += k->wFar[i];
      if (a != 0 && b == 0) dE -= k->wFar[i];
    }
    return dE;
  }
  void apply_flip(LabelGrid& g, int i, int a, int b) {
    const auto& d = g.domain;
    auto ci = d.coords(i);
    for (int j = 0; j < d.cells(); ++j) {
      auto cj = d.coords(j);
      std::array<int, 3> delta{cj[0] - ci[0], cj[1] - ci[1], cj[2] - ci[2]};
      double kk = k->K(delta);
      v[a][j] -= kk;
      v[b][j] += kk;
    }
    g.labels[i] = (std::uint8_t)b;
  }
  double swap_delta(const LabelGrid& g, int i, int j, int a, int b) const {
    auto ci = g.domain.coords(i), cj = g.domain.coords(j);
    std::array<int, 3> delta{cj[0] - ci[0], cj[1] - ci[1], cj[2] - ci[2]};
    double dE = v[a][i] - v[b][i] + v[b][j] - v[a][j] +
                2.0 * k->K(delta);
    if (g.domain.mode == Mode::Free) {
      if (a == 0) dE += k->wFar[i] - k->wFar[j];
      if (b == 0) dE += k->wFar[j] - k->wFar[i];
    }
    return dE;
  }
  void apply_swap(LabelGrid& g, int i, int j, int a, int b) {
    apply_flip(g, i, a, b);
    apply_flip(g, j, b, a);
  }
};

std::array<long long, 256> label_counts(const LabelGrid& g) {
  std::array<long long, 256> c{};
  for (auto l : g.labels) ++c[l];
  return c;
}

}  // namespace

LabelGrid repair_volumes(const LabelGrid& g0, const VolumeVector& m,
                         const KernelTensor& k, double budget, double C,
                         double* deltaE, bool* boundHolds) {
  if ((int)m.size() != g0.N)
    throw std::invalid_argument("repair_volumes: volume count mismatch");
  const auto& d = g0.domain;
  double vol = d.cellVolume();
  std::vector<long long> target(g0.N + 1, 0);
  long long sumT = 0;
  for (int h = 1; h <= g0.N; ++h) {
    target[h] = std::llround(m[h - 1] / vol);
    sumT += target[h];
  }
  target[0] = d.cells() - sumT;
  if (target[0] < 0)
    throw std::invalid_argument("repair_volumes: infeasible volumes");
  auto counts = label_counts(g0);
  double mismatch = 0.0;
  for (int h = 1; h <= g0.N; ++h) {
    double err = std::abs((double)counts[h] - (double)target[h]) * vol;
    mismatch += err;
    if (err > budget * m[h - 1] + vol * 0.5)
      throw std::runtime_error("repair_volumes: volume error beyond budget");
  }

  LabelGrid g = g0;
  double refPs = cluster_perimeter(g0, k).total;
  Potentials pot{&k, {}};
  pot.init(g);
  double dE = 0.0;
  for (;;) {
    bool balanced = true;
    for (int h = 0; h <= g.N; ++h)
      if (counts[h] != target[h]) balanced = false;
    if (balanced) break;
    // cheapest admissible interface relabel from a surplus to a deficit label
    double bestDelta = 0.0;
    int bestI = -1, bestB = -1;
    for (int i = 0; i < d.cells(); ++i) {
      int a = g.labels[i];
      if (counts[a] <= target[a]) continue;
      auto c = d.coords(i);
      for (int axis = 0; axis < d.n; ++axis) {
        for (int st = -1; st <= 1; st += 2) {
          auto cc = c;
          cc[axis] += st;
          if (cc[axis] < 0 || cc[axis] >= d.dims[axis]) {
            if (d.mode == Mode::Periodic)
              cc[axis] = (cc[axis] + d.dims[axis]) % d.dims[axis];
            else
              continue;
          }
          int b = g.labels[d.index(cc)];
          if (b == a || counts[b] >= target[b]) continue;
          if (b != 0 && !cell_allowed(d, i)) continue;
          double delta = pot.flip_delta(g, i, a, b);
          if (bestI < 0 || delta < bestDelta ||
              (delta == bestDelta && i < bestI)) {
            bestDelta = delta;
            bestI = i;
            bestB = b;
          }
        }
      }
    }
    if (bestI < 0)
      throw std::runtime_error(
          "repair_volumes: no admissible interface relabel (deadlock)");
    int a = g.labels[bestI];
    pot.apply_flip(g, bestI, a, bestB);
    --counts[a];
    ++counts[bestB];
    dE += bestDelta;
  }
  if (deltaE) *deltaE = dE;
  if (boundHolds)
    *boundHolds = mismatch == 0.0 || dE <= C * refPs * mismatch + 1e-12;
  return g;
}

LabelGrid anneal(const LabelGrid& g0, const VolumeVector& m,
                 const KernelTensor& k, const AnnealSchedule& sched,
                 std::uint64_t seed) {
  const auto& d = g0.domain;
  {
    auto vols = volumes(g0);
    for (int h = 0; h < g0.N; ++h)
      if (std::abs(vols[h] - m[h]) > 0.5 * d.cellVolume())
        throw std::invalid_argument("anneal: grid does not match volumes");
  }
  LabelGrid g = g0;
  Potentials pot{&k, {}};
  pot.init(g);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, d.cells() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double E = 0.0;  // relative to start
  double bestE = 0.0;
  LabelGrid best = g;
  double t0 = sched.t0, t1 = std::max(sched.t1, sched.t0 > 0 ? 1e-12 : 0.0);
  for (long long it = 0; it < sched.iters; ++it) {
    double T = 0.0;
    if (t0 > 0.0)
      T = t0 * std::pow(t1 / t0, (double)it / (double)std::max<long long>(
                                                   1, sched.iters - 1));
    int i = pick(rng), j = pick(rng);
    int a = g.labels[i], b = g.labels[j];
    if (a == b) continue;
    if (d.mode == Mode::Free) {
      if ((b != 0 && !cell_allowed(d, i)) || (a != 0 && !cell_allowed(d, j)))
        continue;
    }
    double delta = pot.swap_delta(g, i, j, a, b);
    bool accept = delta < 0.0;
    if (!accept && T > 0.0) accept = unif(rng) < std::exp(-delta / T);
    if (!accept) continue;
    pot.apply_swap(g, i, j, a, b);
    E += delta;
    if (E < bestE - 1e-15) {
      bestE = E;
      best = g;
    }
  }
  return best;
}

LabelGrid polish_swaps(const LabelGrid& g0, const KernelTensor& k) {
  const auto& d = g0.domain;
  LabelGrid g = g0;
  Potentials pot{&k, {}};
  pot.init(g);
  for (long long round = 0; round < 10LL * d.cells(); ++round) {
    Mask bd(d.cells(), 0);
    for (int h = 0; h <= g.N; ++h)
      for (int i : boundary_cells(g, h)) bd[i] = 1;
    std::vector<int> cells;
    for (int i = 0; i < d.cells(); ++i)
      if (bd[i]) cells.push_back(i);
    double bestDelta = -1e-12;
    int bi = -1, bj = -1;
    for (size_t p = 0; p < cells.size(); ++p) {
      for (size_t q = p + 1; q < cells.size(); ++q) {
        int i = cells[p], j = cells[q];
        int a = g.labels[i], b = g.labels[j];
        if (a == b) continue;
        if (d.mode == Mode::Free) {
          if ((b != 0 && !cell_allowed(d, i)) ||
              (a != 0 && !cell_allowed(d, j)))
            continue;
        }
        double delta = pot.swap_delta(g, i, j, a, b);
        if (delta < bestDelta) {
          bestDelta = delta;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    pot.apply_swap(g, bi, bj, g.labels[bi], g.labels[bj]);
  }
  return g;
}

namespace {

double direct_cluster_energy(const std::vector<int>& labels,
                             const std::vector<int>& cells,
                             const std::vector<std::vector<double>>& pairK,
                             const std::vector<double>& base,
                             const std::vector<double>& far) {
  // base[i] = rowSum over ALL in-box cells; here we need the pair matrix over
  // the chosen support only, so use: E_box = (1/2) sum_{i,j: l(i)!=l(j)} K.
  (void)base;
  double E = 0.0;
  int M = (int)cells.size();
  for (int p = 0; p < M; ++p)
    for (int q = p + 1; q < M; ++q)
      if (labels[p] != labels[q]) E += pairK[p][q];
  for (int p = 0; p < M; ++p)
    if (labels[p] != 0) E += far.empty() ? 0.0 : far[p];
  return E;
}

}  // namespace

LabelGrid exhaustive_min(const DomainSpec& d, const VolumeVector& m,
                         const KernelTensor& k) {
  int N = (int)m.size();
  if (N < 1 || N > 2)
    throw std::invalid_argument("exhaustive_min: N must be 1 or 2");
  double vol = d.cellVolume();
  std::vector<long long> target(N);
  for (int h = 0; h < N; ++h) target[h] = std::llround(m[h] / vol);

  std::vector<int> cells;
  for (int i = 0; i < d.cells(); ++i)
    if (cell_allowed(d, i)) cells.push_back(i);
  int M = (int)cells.size();
  // search-space guard
  auto choose = [](int n, int r) {
    double c = 1.0;
    for (int i = 0; i < r; ++i) c = c * (n - i) / (i + 1);
    return c;
  };
  double space = choose(M, (int)target[0]);
  if (N == 2) space *= choose(M - (int)target[0], (int)target[1]);
  if (space > 1e7)
    throw std::invalid_argument("exhaustive_min: search space too large");

  std::vector<std::vector<double>> pairK(M, std::vector<double>(M, 0.0));
  for (int p = 0; p < M; ++p) {
    auto cp = d.coords(cells[p]);
    for (int q = 0; q < M; ++q) {
      if (p == q) continue;
      auto cq = d.coords(cells[q]);
      pairK[p][q] = k.K({cq[0] - cp[0], cq[1] - cp[1], cq[2] - cp[2]});
    }
  }
  std::vector<double> far;
  if (d.mode == Mode::Free) {
    far.resize(M);
    for (int p = 0; p < M; ++p) far[p] = k.wFar[cells[p]];
  }
  // Note: in-box pair energies ignore label-0 cells outside `cells` (free
  // mode outer layer); those cells always carry label 0 so their interaction
  // terms must be added: for free mode outer-layer cells j, every labeled
  // cell i contributes K(i-j). Fold that into a per-cell offset.
  std::vector<double> outerTerm(M, 0.0);
  if (d.mode == Mode::Free) {
    for (int p = 0; p < M; ++p) {
      auto cp = d.coords(cells[p]);
      for (int j = 0; j < d.cells(); ++j) {
        if (cell_allowed(d, j)) continue;
        auto cj = d.coords(j);
        outerTerm[p] += k.K({cj[0] - cp[0], cj[1] - cp[1], cj[2] - cp[2]});
      }
    }
  }

  std::vector<int> labels(M, 0);
  std::vector<int> bestLabels;
  double bestE = 0.0;
  std::function<void(int, int, int)> rec = [&](int h, int from, int left) {
    if (left == 0) {
      if (h + 1 <= N) {
        rec(h + 1, 0, (int)target[h]);
        return;
      }
      double E = direct_cluster_energy(labels, cells, pairK, {}, far);
      for (int p = 0; p < M; ++p)
        if (labels[p] != 0) E += outerTerm[p];
      if (bestLabels.empty() || E < bestE - 1e-13) {
        bestE = E;
        bestLabels = labels;
      }
      return;
    }
    for (int p = from; p <= M - left; ++p) {
      if (labels[p] != 0) continue;
      labels[p] = h;
      rec(h, p + 1, left - 1);
      labels[p] = 0;
    }
  };
  rec(1, 0, (int)target[0]);

  LabelGrid g;
  g.domain = d;
  g.N = N;
  g.labels.assign(d.cells(), 0);
  for (int p = 0; p < M; ++p) g.labels[cells[p]] = (std::uint8_t)bestLabels[p];
  return g;
}

SolveResult minimize(const SolveConfig& cfg, const KernelTensor& k) {
  auto tStart = std::chrono::steady_clock::now();
  const auto& d = k.domain;
  SolveResult res;

  SeedDescriptor init = cfg.init;
  if (init.volumes.empty()) init.volumes = cfg.targets;
  init.seed = init.seed ? init.seed : cfg.seed;
  LabelGrid g = seed_cluster(d, cfg.N, init);
  int M = d.cells();
  double vol = d.cellVolume();

  std::vector<long long> target(cfg.N + 1, 0);
  {
    long long sumT = 0;
    for (int h = 1; h <= cfg.N; ++h) {
      target[h] = std::llround(cfg.targets[h - 1] / vol);
      sumT += target[h];
    }
    target[0] = M - sumT;
    if (target[0] < 0)
      throw std::invalid_argument("minimize: infeasible volumes");
  }

  // Rasterized seeds can miss the targets by a few cells; fix the counts up
  // front so every later iterate is feasible.
  if (cfg.doRepair)
    g = repair_volumes(g, cfg.targets, k,
                       std::max(cfg.repairBudget, 1.0), cfg.repairC,
                       &res.repairDeltaE, &res.repairBoundHolds);

  // Threshold dynamics: relabel each cell to the chamber whose indicator
  // carries the largest kernel-weighted neighborhood mass, then restore the
  // exact cell counts by the cheapest score-gap relabels. The raw quadratic
  // relaxation is minimized by constants, so descent on it cannot produce a
  // useful partition; thresholding keeps the iterate binary throughout.
  // The iteration is not strictly monotone (the zero-diagonal operator is
  // indefinite), so the best iterate seen is kept and returned.
  double E = cluster_perimeter(g, k).total;
  res.trace.push_back({0, E, 0.0, 0.0});
  res.termination = "max-iters";
  LabelGrid best = g;
  double bestE = E;
  int stale = 0;
  if (cfg.doBinarize) {
    for (int it = 1; it <= cfg.maxIters; ++it) {
      std::vector<std::vector<double>> score(cfg.N + 1);
      for (int h = 0; h <= cfg.N; ++h) {
        std::vector<double> ind(M, 0.0);
        for (int i = 0; i < M; ++i)
          if (g.labels[i] == h) ind[i] = 1.0;
        score[h] = k.correlate(ind);
      }
      if (d.mode == Mode::Free)  // the complement of the box is chamber 0
        for (int i = 0; i < M; ++i) score[0][i] += k.wFar[i];

      LabelGrid next = g;
      std::vector<long long> counts(cfg.N + 1, 0);
      for (int i = 0; i < M; ++i) {
        int lab = 0;
        if (cell_allowed(d, i)) {
          for (int h = 1; h <= cfg.N; ++h)
            if (score[h][i] > score[lab][i]) lab = h;
        }
        next.labels[i] = (std::uint8_t)lab;
        ++counts[lab];
      }
      // greedy count repair: move the cell with the smallest score loss from
      // a surplus chamber to a deficit chamber
      for (;;) {
        bool balanced = true;
        for (int h = 0; h <= cfg.N; ++h)
          if (counts[h] != target[h]) balanced = false;
        if (balanced) break;
        int bestI = -1, bestB = -1;
        double bestGap = 0.0;
        for (int i = 0; i < M; ++i) {
          int a = next.labels[i];
          if (counts[a] <= target[a]) continue;
          for (int b = 0; b <= cfg.N; ++b) {
            if (b == a || counts[b] >= target[b]) continue;
            if (b != 0 && !cell_allowed(d, i)) continue;
            double gap = score[b][i] - score[a][i];
            if (bestI < 0 || gap > bestGap) {
              bestGap = gap;
              bestI = i;
              bestB = b;
            }
          }
        }
        if (bestI < 0)
          throw std::runtime_error("minimize: count repair deadlock");
        --counts[next.labels[bestI]];
        ++counts[bestB];
        next.labels[bestI] = (std::uint8_t)bestB;
      }

      long long changed = 0;
      for (int i = 0; i < M; ++i)
        if (next.labels[i] != g.labels[i]) ++changed;
      g = std::move(next);
      E = cluster_perimeter(g, k).total;
      res.trace.push_back({it, E, (double)changed / M, 1.0});
      if (E < bestE - cfg.energyTol * std::max(1.0, std::abs(bestE))) {
        bestE = E;
        best = g;
        stale = 0;
      } else {
        ++stale;
      }
      if (changed == 0 || stale >= 3) {
        res.termination = "converged";
        break;
      }
    }
  }
  g = best;

  res.soft.domain = d;
  res.soft.N = cfg.N;
  res.soft.fields.assign(cfg.N, std::vector<double>(M, 0.0));
  for (int i = 0; i < M; ++i)
    if (g.labels[i] >= 1) res.soft.fields[g.labels[i] - 1][i] = 1.0;
  res.soft = project_constraints(res.soft, cfg.targets);

  LabelGrid out = g;
  if (cfg.doPolish) out = polish_swaps(out, k);
  if (cfg.anneal.iters > 0) out = anneal(out, cfg.targets, k, cfg.anneal, cfg.seed);
  res.grid = out;
  res.achieved = volumes(out);
  res.finalEnergy = cluster_perimeter(out, k).total;
  res.wallSeconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - tStart)
                        .count();
  return res;
}

}  // namespace fcl
