#include <doctest.h>

#include <cmath>

#include "fedsense/error.hpp"
#include "fedsense/geometry.hpp"

using namespace fedsense;
using namespace fedsense::geometry;

TEST_SUITE("geometry") {

TEST_CASE("single UAV lands inside the box") {
  Rng rng(3);
  const Bounds b;
  const auto pts = sample_uav_positions(1, 1e6, b, rng);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].x >= 0.0);
  CHECK(pts[0].x <= b.x_max);
  CHECK(pts[0].y >= 0.0);
  CHECK(pts[0].y <= b.y_max);
  CHECK(pts[0].z >= 0.0);
  CHECK(pts[0].z <= b.z_max);
}

TEST_CASE("sixteen UAVs respect the 100 m hardcore distance") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto pts = sample_uav_positions(16, 100.0, Bounds{}, rng);
    REQUIRE(pts.size() == 16);
    CHECK(min_pairwise_distance(pts) >= 100.0);
    for (const auto& p : pts) {
      CHECK(p.z >= 0.0);
      CHECK(p.z <= 120.0);
    }
  }
}

TEST_CASE("infeasible packing raises PackingFailure") {
  // Two points 7000 m apart need opposite corners of the box; count the
  // proposals that could succeed with an independent brute-force oracle.
  Rng oracle(11);
  int feasible = 0;
  for (int i = 0; i < 100000; ++i) {
    const Position3D a{oracle.uniform(0, 5000), oracle.uniform(0, 5000), oracle.uniform(0, 120)};
    const Position3D b{oracle.uniform(0, 5000), oracle.uniform(0, 5000), oracle.uniform(0, 120)};
    if (distance(a, b) >= 7000.0) ++feasible;
  }
  CHECK(feasible < 100);

  Rng rng(5);
  CHECK_THROWS_AS(sample_uav_positions(2, 7000.0, Bounds{}, rng), PackingFailure);
}

TEST_CASE("radar placement") {
  Rng rng(8);
  const auto degenerate = sample_radar_position(0.0, 0.0, 40.0, rng);
  CHECK(degenerate == Position3D{0.0, 0.0, 40.0});

  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_radar_position(5000.0, 5000.0, 40.0, rng);
    CHECK(p.z == 40.0);
    sum += p.x;
  }
  const double sigma = 5000.0 / std::sqrt(12.0);
  CHECK(std::abs(sum / n - 2500.0) <= 3.0 * sigma / std::sqrt(double(n)));
}

TEST_CASE("distance examples") {
  CHECK(distance({3, 4, 12}, {0, 0, 0}) == doctest::Approx(13.0).epsilon(1e-15));
  CHECK(distance({7, 8, 9}, {7, 8, 9}) == 0.0);
  const double oracle = std::sqrt(50.0 * 50.0 + 150.0 * 150.0 + 80.0 * 80.0);
  CHECK(distance({100, 200, 120}, {50, 50, 40}) == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(distance({100, 200, 120}, {50, 50, 40}) == doctest::Approx(177.20).epsilon(1e-4));
}

TEST_CASE("elevation angle examples") {
  CHECK(elevation_angle({100, 0, 100}, {0, 0, 0}) == doctest::Approx(45.0));
  CHECK(elevation_angle({100, 50, 40}, {0, 0, 40}) == 0.0);
  CHECK(elevation_angle({10, 10, 90}, {10, 10, 40}) == 90.0);
  CHECK(elevation_angle({10, 10, 0}, {10, 10, 40}) == -90.0);
  CHECK_THROWS_AS(elevation_angle({1, 2, 3}, {1, 2, 3}), DegenerateGeometry);
}

TEST_CASE("distance symmetry, triangle inequality, elevation sign") {
  Rng rng(21);
  auto draw = [&] {
    return Position3D{rng.uniform(0, 5000), rng.uniform(0, 5000), rng.uniform(0, 120)};
  };
  for (int i = 0; i < 1000; ++i) {
    const auto a = draw();
    const auto b = draw();
    const auto c = draw();
    CHECK(distance(a, b) == distance(b, a));
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
    const double e = elevation_angle(a, b);
    CHECK(e >= -90.0);
    CHECK(e <= 90.0);
    CHECK((e > 0) == (a.z > b.z));
  }
}

TEST_CASE("scene geometry is reproducible") {
  Rng r1(99);
  Rng r2(99);
  const auto s1 = make_scene_geometry(16, 100.0, Bounds{}, 40.0, r1);
  const auto s2 = make_scene_geometry(16, 100.0, Bounds{}, 40.0, r2);
  CHECK(s1.uav_positions == s2.uav_positions);
  CHECK(s1.radar_position == s2.radar_position);
  CHECK(s1.distances == s2.distances);
  CHECK(s1.elevations == s2.elevations);
  REQUIRE(s1.size() == 16);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1.distances[i] == distance(s1.uav_positions[i], s1.radar_position));
    CHECK(s1.distances[i] > 0.0);
  }
}

}
