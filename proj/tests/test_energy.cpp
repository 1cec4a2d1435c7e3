#include <cmath>
#include <random>

#include "doctest.h"
#include "fcl/energy.hpp"
#include "fcl/kernel.hpp"

using namespace fcl;

namespace {

Mask random_mask(const DomainSpec& d, std::mt19937_64& rng, double p,
                 bool keepOuterClear) {
  Mask m(d.cells(), 0);
  std::uniform_real_distribution<> u(0, 1);
  for (int i = 0; i < d.cells(); ++i) {
    if (keepOuterClear && d.onOuterLayer(i)) continue;
    m[i] = u(rng) < p;
  }
  return m;
}

double brute_perimeter(const Mask& E, const KernelTensor& k) {
  const auto& d = k.domain;
  double P = 0.0;
  for (int i = 0; i < d.cells(); ++i) {
    if (!E[i]) continue;
    auto ci = d.coords(i);
    for (int j = 0; j < d.cells(); ++j) {
      if (E[j]) continue;
      auto cj = d.coords(j);
      P += k.K({ci[0] - cj[0], ci[1] - cj[1], ci[2] - cj[2]});
    }
    if (d.mode == Mode::Free) P += k.wFar[i];
  }
  return P;
}

double brute_interaction(const Mask& E, const Mask& F, const KernelTensor& k) {
  const auto& d = k.domain;
  double I = 0.0;
  for (int i = 0; i < d.cells(); ++i) {
    if (!E[i]) continue;
    auto ci = d.coords(i);
    for (int j = 0; j < d.cells(); ++j) {
      if (!F[j]) continue;
      auto cj = d.coords(j);
      I += k.K({ci[0] - cj[0], ci[1] - cj[1], ci[2] - cj[2]});
    }
  }
  return I;
}

}  // namespace

TEST_CASE("perimeter matches the direct double sum") {
  std::mt19937_64 rng(11);
  for (Mode mode : {Mode::Periodic, Mode::Free}) {
    for (int n : {1, 2}) {
      std::vector<int> dims(n, n == 1 ? 16 : 10);
      auto d = make_domain(n, dims, (double)dims[0], mode, 0.5);
      auto k = build_kernel(d);
      for (int t = 0; t < 5; ++t) {
        auto E = random_mask(d, rng, 0.4, mode == Mode::Free);
        CHECK(perimeter(E, k) ==
              doctest::Approx(brute_perimeter(E, k)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("the closed unit interval has perimeter 2/(s(1-s)) at s = 1/2") {
  // [0,1] in one dimension, one cell of size 1
  auto d = make_domain(1, {4}, 4.0, Mode::Free, 0.5);
  auto k = build_kernel(d);
  Mask E(4, 0);
  E[1] = 1;
  CHECK(perimeter(E, k) == doctest::Approx(8.0).epsilon(1e-10));
  Mask E2(4, 0);
  E2[1] = 1;
  E2[2] = 1;
  CHECK(perimeter(E2, k) ==
        doctest::Approx(8.0 * std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("interaction is bilinear over disjoint unions") {
  std::mt19937_64 rng(7);
  auto d = make_domain(2, {8, 8}, 8.0, Mode::Periodic, 0.6);
  auto k = build_kernel(d);
  Mask E = random_mask(d, rng, 0.3, false);
  Mask F(d.cells(), 0), G(d.cells(), 0);
  std::uniform_real_distribution<> u(0, 1);
  for (int i = 0; i < d.cells(); ++i) {
    if (E[i]) continue;
    (u(rng) < 0.5 ? F : G)[i] = u(rng) < 0.6;
  }
  Mask FG(d.cells(), 0);
  for (int i = 0; i < d.cells(); ++i) FG[i] = F[i] || G[i];
  CHECK(interaction(E, FG, k) ==
        doctest::Approx(interaction(E, F, k) + interaction(E, G, k))
            .epsilon(1e-11));
  CHECK(interaction(E, F, k) ==
        doctest::Approx(brute_interaction(E, F, k)).epsilon(1e-10));
}

TEST_CASE("localization: relative perimeters overcount by the cross terms") {
  std::mt19937_64 rng(19);
  auto d = make_domain(2, {8, 8}, 8.0, Mode::Periodic, 0.5);
  auto k = build_kernel(d);
  for (int t = 0; t < 10; ++t) {
    Mask E = random_mask(d, rng, 0.4, false);
    Mask W = random_mask(d, rng, 0.5, false);
    Mask Wc(d.cells(), 0), Ec(d.cells(), 0);
    for (int i = 0; i < d.cells(); ++i) {
      Wc[i] = !W[i];
      Ec[i] = !E[i];
    }
    auto inter = [&](const Mask& A, const Mask& B) {
      Mask AB(d.cells(), 0);
      for (int i = 0; i < d.cells(); ++i) AB[i] = A[i] && B[i];
      return AB;
    };
    double lhs = relative_perimeter(E, W, k) + relative_perimeter(E, Wc, k) -
                 perimeter(E, k);
    double rhs = interaction(inter(E, W), inter(Ec, Wc), k) +
                 interaction(inter(E, Wc), inter(Ec, W), k);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("cluster energy is the half-sum and the breakdown is consistent") {
  std::mt19937_64 rng(23);
  auto d = make_domain(2, {8, 8}, 8.0, Mode::Periodic, 0.5);
  auto k = build_kernel(d);
  LabelGrid g{d, 2, std::vector<std::uint8_t>(d.cells(), 0)};
  std::uniform_int_distribution<int> lab(0, 2);
  for (auto& l : g.labels) l = (std::uint8_t)lab(rng);
  auto eb = cluster_perimeter(g, k);
  REQUIRE((int)eb.perChamber.size() == 3);
  double half = 0.0;
  for (double p : eb.perChamber) half += p;
  CHECK(eb.total == doctest::Approx(half / 2.0).epsilon(1e-12));
  for (int h = 0; h <= 2; ++h) {
    CHECK(perimeter(chamber_mask(g, h), k) ==
          doctest::Approx(eb.perChamber[h]).epsilon(1e-10));
    double row = 0.0;
    for (int j = 0; j <= 2; ++j) {
      row += eb.pairwise[h][j];
      CHECK(eb.pairwise[h][j] ==
            doctest::Approx(eb.pairwise[j][h]).epsilon(1e-12));
    }
    CHECK(row == doctest::Approx(eb.perChamber[h]).epsilon(1e-10));
  }
}

TEST_CASE("energies scale as lambda^(n-s) under dilation") {
  std::mt19937_64 rng(31);
  for (double s : {0.3, 0.5, 0.8}) {
    auto d1 = make_domain(2, {10, 10}, 10.0, Mode::Free, s);
    auto d2 = make_domain(2, {10, 10}, 25.0, Mode::Free, s);
    auto k1 = build_kernel(d1);
    auto k2 = build_kernel(d2);
    auto E = random_mask(d1, rng, 0.4, true);
    double ratio = perimeter(E, k2) / perimeter(E, k1);
    CHECK(ratio == doctest::Approx(std::pow(2.5, 2.0 - s)).epsilon(1e-9));
  }
}

TEST_CASE("soft energy of a binary cluster equals the hard energy") {
  std::mt19937_64 rng(41);
  for (Mode mode : {Mode::Periodic, Mode::Free}) {
    auto d = make_domain(2, {8, 8}, 8.0, mode, 0.5);
    auto k = build_kernel(d);
    LabelGrid g{d, 2, std::vector<std::uint8_t>(d.cells(), 0)};
    for (int i = 0; i < d.cells(); ++i)
      if (!(mode == Mode::Free && d.onOuterLayer(i)))
        g.labels[i] = (std::uint8_t)(rng() % 3);
    SoftCluster sc{d, 2, std::vector<std::vector<double>>(
                             2, std::vector<double>(d.cells(), 0.0))};
    for (int i = 0; i < d.cells(); ++i)
      if (g.labels[i] >= 1) sc.fields[g.labels[i] - 1][i] = 1.0;
    CHECK(soft_energy(sc, k) ==
          doctest::Approx(cluster_perimeter(g, k).total).epsilon(1e-10));
  }
}

TEST_CASE("soft gradient matches central finite differences") {
  std::mt19937_64 rng(43);
  auto d = make_domain(1, {12}, 12.0, Mode::Periodic, 0.5);
  auto k = build_kernel(d);
  SoftCluster sc{d, 2, std::vector<std::vector<double>>(
                           2, std::vector<double>(12, 0.0))};
  std::uniform_real_distribution<> u(0.05, 0.45);
  for (int h = 0; h < 2; ++h)
    for (int i = 0; i < 12; ++i) sc.fields[h][i] = u(rng);
  auto grad = soft_gradient(sc, k);
  double eps = 1e-6;
  for (int h = 0; h < 2; ++h)
    for (int i = 0; i < 12; ++i) {
      auto plus = sc, minus = sc;
      plus.fields[h][i] += eps;
      minus.fields[h][i] -= eps;
      double fd = (soft_energy(plus, k) - soft_energy(minus, k)) / (2 * eps);
      CHECK(grad[h][i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("potential is the kernel-weighted occupancy sum") {
  std::mt19937_64 rng(47);
  auto d = make_domain(2, {6, 6}, 6.0, Mode::Free, 0.5);
  auto k = build_kernel(d);
  auto E = random_mask(d, rng, 0.5, true);
  auto v = potential(E, k);
  for (int i = 0; i < d.cells(); ++i) {
    double want = 0.0;
    auto ci = d.coords(i);
    for (int j = 0; j < d.cells(); ++j) {
      if (!E[j] || j == i) continue;
      auto cj = d.coords(j);
      want += k.K({ci[0] - cj[0], ci[1] - cj[1], 0});
    }
    CHECK(v[i] == doctest::Approx(want).epsilon(1e-10));
  }
}
