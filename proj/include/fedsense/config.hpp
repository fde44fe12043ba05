#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "fedsense/channel.hpp"
#include "fedsense/geometry.hpp"
#include "fedsense/nn.hpp"

namespace fedsense {

enum class Aggregator : std::uint8_t { FedAvg, FedSnr };

std::string_view to_string(Aggregator a) noexcept;
Aggregator parse_aggregator(std::string_view text);

struct DataConfig {
  std::size_t data_per_uav = 256;  // B
  double test_fraction = 0.25;     // held-out examples per UAV = round(B * f)
  double p_h1 = 0.5;               // probability the radar is present

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

// Every simulation knob. Defaults reproduce the full-scale parameter table;
// desk_scale() gives the reduced setup used for sweeps.
struct SimulationConfig {
  std::size_t settings = 500;
  std::size_t num_uavs = 16;
  geometry::Bounds bounds;
  double radar_altitude = 40.0;
  double d_min = 100.0;
  std::size_t packing_retries = geometry::kDefaultPackingRetries;

  channel::RadioConfig radio;
  channel::PathLossParams path_loss;
  DataConfig data;
  nn::TrainConfig train;

  Aggregator aggregator = Aggregator::FedSnr;
  bool fresh_init = false;  // debug: re-initialize clients every round
  std::uint64_t seed = 1;
  std::size_t repeats = 1;
  std::size_t workers = 1;

  std::size_t test_per_uav() const noexcept;

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;

  /// 40 settings, 8 UAVs, B = 128, M = 512 with f_s scaled to 51.2 MHz so
  /// the sensing interval stays 10 us.
  static SimulationConfig desk_scale();

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

}  // namespace fedsense
