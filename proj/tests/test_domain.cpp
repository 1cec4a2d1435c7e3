#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "fcl/distance_transform.hpp"
#include "fcl/domain.hpp"

using namespace fcl;

TEST_CASE("make_domain validates its arguments") {
  CHECK_THROWS_AS(make_domain(2, {8}, 1.0, Mode::Periodic, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_domain(1, {1}, 1.0, Mode::Periodic, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_domain(2, {8, 4}, 1.0, Mode::Periodic, 0.5),
                  std::invalid_argument);
  auto d = make_domain(2, {8, 8}, 2.0, Mode::Free, 0.3);
  CHECK(d.cellSize == doctest::Approx(0.25));
  CHECK(d.cells() == 64);
  CHECK(d.cellVolume() == doctest::Approx(0.0625));
}

TEST_CASE("index and coords are inverse") {
  auto d = make_domain(3, {4, 4, 4}, 1.0, Mode::Periodic, 0.5);
  for (int i = 0; i < d.cells(); ++i) CHECK(d.index(d.coords(i)) == i);
}

TEST_CASE("mode names round trip") {
  CHECK(parse_mode(mode_name(Mode::Free)) == Mode::Free);
  CHECK(parse_mode(mode_name(Mode::Periodic)) == Mode::Periodic);
  CHECK_THROWS_AS(parse_mode("torus"), std::invalid_argument);
}

TEST_CASE("volumes and chamber masks agree") {
  auto d = make_domain(2, {6, 6}, 6.0, Mode::Periodic, 0.5);
  LabelGrid g{d, 2, std::vector<std::uint8_t>(d.cells(), 0)};
  g.labels[7] = 1;
  g.labels[8] = 1;
  g.labels[14] = 2;
  auto v = volumes(g);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(2.0));
  CHECK(v[1] == doctest::Approx(1.0));
  CHECK(exterior_volume_in_box(g) == doctest::Approx(33.0));
  auto m1 = chamber_mask(g, 1);
  int cnt = 0;
  for (auto b : m1) cnt += b;
  CHECK(cnt == 2);
  CHECK(m1[7] == 1);
}

TEST_CASE("relative distance counts symmetric differences per chamber") {
  auto d = make_domain(1, {8}, 8.0, Mode::Periodic, 0.5);
  LabelGrid a{d, 1, std::vector<std::uint8_t>(8, 0)};
  LabelGrid b = a;
  a.labels[2] = 1;
  a.labels[3] = 1;
  b.labels[3] = 1;
  b.labels[4] = 1;
  // cells 2 and 4 differ; both chambers 0 and 1 see each
  CHECK(relative_distance(a, b) == doctest::Approx(4.0));
  Mask region(8, 0);
  region[2] = 1;
  CHECK(relative_distance(a, b, region) == doctest::Approx(2.0));
}

TEST_CASE("boundary cells see axis neighbors and the free exterior") {
  auto d = make_domain(1, {8}, 8.0, Mode::Free, 0.5);
  LabelGrid g{d, 1, std::vector<std::uint8_t>(8, 0)};
  g.labels[3] = 1;
  g.labels[4] = 1;
  auto bd = boundary_cells(g, 1);
  REQUIRE(bd.size() == 2);
  CHECK(bd[0] == 3);
  CHECK(bd[1] == 4);
  auto cb = cluster_boundary(g);
  CHECK(cb[3] == 1);
  CHECK(cb[2] == 0);
}

TEST_CASE("grid files round trip byte for byte") {
  auto d = make_domain(2, {4, 4}, 1.0, Mode::Free, 0.7);
  LabelGrid g{d, 2, std::vector<std::uint8_t>(16, 0)};
  g.labels[5] = 1;
  g.labels[6] = 2;
  auto bytes = serialize_grid(g);
  auto g2 = parse_grid(bytes);
  CHECK(g2.domain == d);
  CHECK(g2.N == 2);
  CHECK(g2.labels == g.labels);
  CHECK(serialize_grid(g2) == bytes);
}

TEST_CASE("soft cluster files preserve doubles exactly") {
  auto d = make_domain(1, {5}, 5.0, Mode::Periodic, 0.4);
  SoftCluster sc{d, 1, {{0.0, 0.125, 1.0 / 3.0, 1.0, 0.0}}};
  auto bytes = serialize_soft(sc);
  auto sc2 = parse_soft(bytes);
  CHECK(sc2.domain == d);
  REQUIRE(sc2.fields.size() == 1);
  for (int i = 0; i < 5; ++i) CHECK(sc2.fields[0][i] == sc.fields[0][i]);
}

TEST_CASE("ball seeds are disjoint with near-target volumes") {
  auto d = make_domain(2, {24, 24}, 24.0, Mode::Periodic, 0.5);
  SeedDescriptor sd;
  sd.volumes = {40.0, 30.0};
  auto g = seed_cluster(d, 2, sd);
  auto v = volumes(g);
  CHECK(std::abs(v[0] - 40.0) <= 0.1 * 40.0);
  CHECK(std::abs(v[1] - 30.0) <= 0.1 * 30.0);
}

TEST_CASE("random seeds give exact cell counts and are reproducible") {
  auto d = make_domain(2, {10, 10}, 10.0, Mode::Periodic, 0.5);
  SeedDescriptor sd;
  sd.kind = SeedDescriptor::Kind::Random;
  sd.volumes = {17.0, 9.0};
  sd.seed = 42;
  auto g = seed_cluster(d, 2, sd);
  auto v = volumes(g);
  CHECK(v[0] == doctest::Approx(17.0));
  CHECK(v[1] == doctest::Approx(9.0));
  auto g2 = seed_cluster(d, 2, sd);
  CHECK(g.labels == g2.labels);
}

namespace {

std::vector<double> brute_distance(const DomainSpec& d, const Mask& seeds) {
  std::vector<double> out(d.cells(),
                          std::numeric_limits<double>::infinity());
  for (int i = 0; i < d.cells(); ++i) {
    auto ci = d.coords(i);
    for (int j = 0; j < d.cells(); ++j) {
      if (!seeds[j]) continue;
      auto cj = d.coords(j);
      double r2 = 0.0;
      for (int a = 0; a < d.n; ++a) {
        double dd = std::abs(ci[a] - cj[a]);
        if (d.mode == Mode::Periodic) dd = std::min(dd, d.dims[a] - dd);
        r2 += dd * dd;
      }
      out[i] = std::min(out[i], std::sqrt(r2) * d.cellSize);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("distance transform matches brute force") {
  std::mt19937_64 rng(5);
  for (Mode mode : {Mode::Periodic, Mode::Free}) {
    auto d = make_domain(2, {12, 12}, 12.0, mode, 0.5);
    Mask seeds(d.cells(), 0);
    for (int i = 0; i < d.cells(); ++i) seeds[i] = rng() % 11 == 0;
    seeds[17] = 1;  // never empty
    auto got = distance_transform(d, seeds);
    auto want = brute_distance(d, seeds);
    for (int i = 0; i < d.cells(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}
