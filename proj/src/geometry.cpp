#include "fedsense/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedsense/error.hpp"

namespace fedsense::geometry {

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

struct MarkedPoint {
  Position3D position;
  double mark;
};

double squared_distance(const Position3D& a, const Position3D& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<Position3D> sample_uav_positions(std::size_t n, double d_min,
                                             const Bounds& bounds, Rng& rng,
                                             std::size_t max_proposals) {
  if (n == 0) throw ValidationError("sample_uav_positions: n must be >= 1");
  if (!(d_min > 0.0)) {
    throw ValidationError("sample_uav_positions: d_min must be positive");
  }
  if (bounds.x_max < 0.0 || bounds.y_max < 0.0 || bounds.z_max < 0.0) {
    throw ValidationError("sample_uav_positions: negative bounds");
  }

  const double d_min2 = d_min * d_min;
  // Twice the target count keeps acceptance high in sparse boxes.
  const double parent_mean = 2.0 * static_cast<double>(n);

  std::vector<MarkedPoint> parents;
  std::vector<std::size_t> survivors;
  for (std::size_t attempt = 0; attempt < max_proposals; ++attempt) {
    const std::size_t count =
        std::max<std::size_t>(n, rng.poisson(parent_mean));
    parents.clear();
    for (std::size_t i = 0; i < count; ++i) {
      Position3D p{rng.uniform(0.0, bounds.x_max),
                   rng.uniform(0.0, bounds.y_max),
                   rng.uniform(0.0, bounds.z_max)};
      parents.push_back({p, rng.uniform(0.0, 1.0)});
    }

    survivors.clear();
    for (std::size_t i = 0; i < count; ++i) {
      bool retained = true;
      for (std::size_t j = 0; j < count && retained; ++j) {
        if (j == i) continue;
        if (parents[j].mark < parents[i].mark &&
            squared_distance(parents[i].position, parents[j].position) <
                d_min2) {
          retained = false;
        }
      }
      if (retained) survivors.push_back(i);
    }
    if (survivors.size() < n) continue;

    std::sort(survivors.begin(), survivors.end(),
              [&](std::size_t a, std::size_t b) {
                return parents[a].mark < parents[b].mark;
              });
    std::vector<Position3D> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      out.push_back(parents[survivors[k]].position);
    }
    return out;
  }
  throw PackingFailure("could not place " + std::to_string(n) +
                       " UAVs with d_min=" + std::to_string(d_min) +
                       " m after " + std::to_string(max_proposals) +
                       " proposals");
}

Position3D sample_radar_position(double x_max, double y_max, double z_r,
                                 Rng& rng) {
  const double x = rng.uniform(0.0, x_max);
  const double y = rng.uniform(0.0, y_max);
  return {x, y, z_r};
}

double distance(const Position3D& a, const Position3D& b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

double elevation_angle(const Position3D& uav, const Position3D& radar) {
  if (uav == radar) {
    throw DegenerateGeometry("elevation_angle: UAV and radar coincide");
  }
  const double horizontal = std::hypot(uav.x - radar.x, uav.y - radar.y);
  const double dz = uav.z - radar.z;
  // atan2 handles the vertical case (horizontal == 0) as +-90 degrees.
  return std::atan2(dz, horizontal) * kRadToDeg;
}

double min_pairwise_distance(const std::vector<Position3D>& points) noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      best = std::min(best, distance(points[i], points[j]));
    }
  }
  return best;
}

SceneGeometry make_scene_geometry(std::size_t n, double d_min,
                                  const Bounds& bounds, double z_r, Rng& rng,
                                  std::size_t max_proposals) {
  SceneGeometry scene;
  Rng uav_stream = rng.derive("uav-positions");
  Rng radar_stream = rng.derive("radar-position");
  scene.uav_positions =
      sample_uav_positions(n, d_min, bounds, uav_stream, max_proposals);
  scene.radar_position =
      sample_radar_position(bounds.x_max, bounds.y_max, z_r, radar_stream);
  scene.distances.reserve(n);
  scene.elevations.reserve(n);
  for (const auto& p : scene.uav_positions) {
    scene.distances.push_back(distance(p, scene.radar_position));
    scene.elevations.push_back(elevation_angle(p, scene.radar_position));
  }
  return scene;
}

}  // namespace fedsense::geometry
