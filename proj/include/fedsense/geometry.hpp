#pragma once

#include <cstddef>
#include <vector>

#include "fedsense/random.hpp"

namespace fedsense::geometry {

struct Position3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Position3D&, const Position3D&) = default;
};

// Operational box [0, x_max] x [0, y_max] x [0, z_max], meters.
struct Bounds {
  double x_max = 5000.0;
  double y_max = 5000.0;
  double z_max = 120.0;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct SceneGeometry {
  std::vector<Position3D> uav_positions;
  Position3D radar_position;
  std::vector<double> distances;   // meters
  std::vector<double> elevations;  // degrees

  std::size_t size() const noexcept { return uav_positions.size(); }
};

inline constexpr std::size_t kDefaultPackingRetries = 1000;

/// Draws exactly `n` UAV positions from a Matern type-II hardcore process.
///
/// Each proposal scatters a Poisson number of uniformly placed parents with
/// uniform age marks and deletes every parent that has an older parent
/// (deleted or not) closer than `d_min`. The `n` oldest survivors are kept.
/// Throws PackingFailure when `max_proposals` proposals all yield fewer than
/// `n` survivors.
std::vector<Position3D> sample_uav_positions(
    std::size_t n, double d_min, const Bounds& bounds, Rng& rng,
    std::size_t max_proposals = kDefaultPackingRetries);

/// Uniform on the plane z = z_r inside [0, x_max] x [0, y_max].
Position3D sample_radar_position(double x_max, double y_max, double z_r,
                                 Rng& rng);

double distance(const Position3D& a, const Position3D& b) noexcept;

/// Elevation of `uav` seen from `radar`, in degrees, within [-90, 90].
/// Throws DegenerateGeometry when the two positions coincide.
double elevation_angle(const Position3D& uav, const Position3D& radar);

double min_pairwise_distance(const std::vector<Position3D>& points) noexcept;

SceneGeometry make_scene_geometry(std::size_t n, double d_min,
                                  const Bounds& bounds, double z_r, Rng& rng,
                                  std::size_t max_proposals =
                                      kDefaultPackingRetries);

}  // namespace fedsense::geometry
