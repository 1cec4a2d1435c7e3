#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "fcl/extension.hpp"

using namespace fcl;

TEST_CASE("default z-levels are geometric, anchored and inside the slab") {
  auto d = make_domain(1, {64}, 64.0, Mode::Free, 0.5);
  auto z = default_z_levels(d);
  REQUIRE(z.size() >= 16);
  CHECK(z.front() > 0.0);
  CHECK(z.front() <= d.cellSize);
  for (size_t i = 1; i < z.size(); ++i) CHECK(z[i] > z[i - 1]);
  CHECK(z.back() == doctest::Approx(2.0 * d.L));
}

TEST_CASE("extension obeys the maximum principle exactly") {
  auto d = make_domain(1, {64}, 64.0, Mode::Free, 0.5);
  Mask E(64, 0);
  for (int i = 24; i < 40; ++i) E[i] = 1;
  auto f = poisson_extend(E, d, default_z_levels(d));
  for (const auto& level : f.values)
    for (double v : level) {
      CHECK(v <= 1.0 + 1e-12);
      CHECK(v >= -1.0 - 1e-12);
    }
}

TEST_CASE("extension recovers its trace near the bottom of the slab") {
  auto d = make_domain(1, {64}, 64.0, Mode::Free, 0.5);
  Mask E(64, 0);
  for (int i = 24; i < 40; ++i) E[i] = 1;
  auto f = poisson_extend(E, d, default_z_levels(d));
  // away from the jump the first level must be close to +/-1
  double worst = 0.0;
  for (int i = 0; i < 64; ++i) {
    int dist = std::min(std::abs(i - 24), std::abs(i - 39));
    if (dist < 3) continue;
    worst = std::max(worst, std::abs(f.values[0][i] - f.trace[i]));
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("half-space extension is antisymmetric about its interface") {
  auto d = make_domain(1, {64}, 64.0, Mode::Free, 0.5);
  auto f = poisson_extend_halfspace(d, 0, 32.0, default_z_levels(d));
  for (size_t l = 0; l < f.zLevels.size(); ++l)
    for (int i = 0; i < 32; ++i) {
      // cells i and 63-i mirror about x = 32
      CHECK(f.values[l][i] ==
            doctest::Approx(-f.values[l][63 - i]).epsilon(1e-10));
    }
  // monotone in x at fixed height
  for (size_t l = 0; l < f.zLevels.size(); ++l)
    for (int i = 1; i < 64; ++i)
      CHECK(f.values[l][i] >= f.values[l][i - 1] - 1e-12);
}

TEST_CASE("energy over half-balls grows with the radius") {
  auto d = make_domain(1, {64}, 64.0, Mode::Free, 0.5);
  auto f = poisson_extend_halfspace(d, 0, 32.0, default_z_levels(d));
  std::array<double, 3> x0{32.0, 0, 0};
  double prev = 0.0;
  for (double r : {4.0, 8.0, 12.0, 16.0}) {
    double e = dirichlet_energy(f, x0, r);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(dirichlet_energy(f) >= prev);
}

TEST_CASE("the monotonicity profile of a half-space is flagged monotone") {
  auto d = make_domain(1, {128}, 128.0, Mode::Free, 0.5);
  LabelGrid g{d, 1, std::vector<std::uint8_t>(d.cells(), 0)};
  for (int i = 64; i < 127; ++i) g.labels[i] = 1;
  int cell = 64;
  auto p = phi_profile(g, cell, {8.0, 12.0, 18.0, 27.0});
  REQUIRE(p.radii.size() == 4);
  auto rep = check_monotonicity(p, p.lambdaPrime);
  CHECK(rep.pass);
  CHECK(p.lambdaPrime >= 0.0);
  auto csv = p.to_csv();
  CHECK(csv.rfind("radius,", 0) == 0);
}

TEST_CASE("monotonicity check reports the smallest fixing constant") {
  PhiProfile p;
  p.s = 0.5;
  p.radii = {1.0, 2.0, 4.0, 8.0};
  p.phi = {1.0, 0.9, 0.85, 0.84};  // decreasing: needs a positive constant
  p.errEstimate = {0.0, 0.0, 0.0, 0.0};
  auto bad = check_monotonicity(p, 0.0);
  CHECK(!bad.pass);
  // the smallest constant making phi + lam r^s nondecreasing
  double lam = 0.0;
  for (size_t k = 0; k + 1 < p.radii.size(); ++k)
    lam = std::max(lam, (p.phi[k] - p.phi[k + 1]) /
                            (std::pow(p.radii[k + 1], p.s) -
                             std::pow(p.radii[k], p.s)));
  CHECK(lam > 0.0);
  auto good = check_monotonicity(p, lam);
  CHECK(good.pass);
  PhiProfile tooFew;
  tooFew.radii = {1.0, 2.0};
  tooFew.phi = {1.0, 2.0};
  tooFew.errEstimate = {0.0, 0.0};
  CHECK_THROWS_AS(check_monotonicity(tooFew, 0.0), std::invalid_argument);
}

TEST_CASE("per-chamber extensions cover every chamber once") {
  auto d = make_domain(1, {32}, 32.0, Mode::Periodic, 0.5);
  LabelGrid g{d, 2, std::vector<std::uint8_t>(d.cells(), 0)};
  for (int i = 4; i < 12; ++i) g.labels[i] = 1;
  for (int i = 16; i < 24; ++i) g.labels[i] = 2;
  auto zl = default_z_levels(d);
  auto fields = poisson_extend(g, zl);
  REQUIRE(fields.size() == 3);
  for (int i = 0; i < d.cells(); ++i) {
    double sum = 0.0;
    for (const auto& f : fields) sum += (f.trace[i] + 1.0) / 2.0;
    CHECK(sum == doctest::Approx(1.0));  // indicator traces partition the box
  }
}

TEST_CASE("extension fields serialize with their z-levels") {
  auto d = make_domain(1, {16}, 16.0, Mode::Free, 0.5);
  Mask E(16, 0);
  E[7] = 1;
  E[8] = 1;
  auto f = poisson_extend(E, d, default_z_levels(d));
  std::string path = "/tmp/fcl_test_ext.fcls";
  write_extension_field(f, path);
  std::ifstream in(path);
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1.rfind("FCLS", 0) == 0);
  CHECK(l2.find("z") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("z-levels are validated") {
  auto d = make_domain(1, {16}, 16.0, Mode::Free, 0.5);
  Mask E(16, 0);
  E[8] = 1;
  CHECK_THROWS_AS(poisson_extend(E, d, {0.5, 0.25}), std::invalid_argument);
  CHECK_THROWS_AS(poisson_extend(E, d, {-1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(poisson_extend(E, d, {1.0, 100.0 * d.L}),
                  std::invalid_argument);
}
