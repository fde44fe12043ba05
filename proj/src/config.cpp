#include "fedsense/config.hpp"

#include <cmath>
#include <string>

#include "fedsense/error.hpp"

namespace fedsense {

std::string_view to_string(Aggregator a) noexcept {
  return a == Aggregator::FedAvg ? "fedavg" : "fedsnr";
}

Aggregator parse_aggregator(std::string_view text) {
  if (text == "fedavg") return Aggregator::FedAvg;
  if (text == "fedsnr") return Aggregator::FedSnr;
  throw ValidationError("unknown aggregator '" + std::string(text) +
                        "' (expected fedavg or fedsnr)");
}

std::size_t SimulationConfig::test_per_uav() const noexcept {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(data.data_per_uav) * data.test_fraction));
}

void SimulationConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  require(settings >= 1, "settings must be >= 1");
  require(num_uavs >= 1, "num_uavs must be >= 1");
  require(bounds.x_max >= 0.0 && bounds.y_max >= 0.0 && bounds.z_max >= 0.0,
          "x_max, y_max, z_max must be >= 0");
  require(radar_altitude >= 0.0, "z_r must be >= 0");
  require(d_min > 0.0, "d_min must be > 0");
  require(packing_retries >= 1, "packing_retries must be >= 1");
  radio.validate();
  require(radio.m_samples >= nn::kMinSignalLength,
          "signal_length must be >= 4 for the edge model");
  path_loss.validate();
  require(data.data_per_uav >= 1, "data_per_uav must be >= 1");
  require(data.test_fraction > 0.0 && data.test_fraction <= 1.0,
          "test_fraction must be in (0, 1]");
  require(test_per_uav() >= 1, "test_fraction leaves no held-out examples");
  require(data.p_h1 >= 0.0 && data.p_h1 <= 1.0, "p_h1 must be in [0, 1]");
  require(train.adam.lr > 0.0, "lr must be > 0");
  require(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0,
          "beta1 must be in [0, 1)");
  require(train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0,
          "beta2 must be in [0, 1)");
  require(train.adam.eps > 0.0, "adam_eps must be > 0");
  require(train.batch_size >= 1, "batch_size must be >= 1");
  require(train.max_epochs <= 20, "max_epochs must be <= 20");
  require(train.patience >= 1, "patience must be >= 1");
  require(train.min_delta >= 0.0, "min_delta must be >= 0");
  require(train.bn_momentum >= 0.0 && train.bn_momentum < 1.0,
          "bn_momentum must be in [0, 1)");
  require(repeats >= 1, "repeats must be >= 1");
  require(workers >= 1, "workers must be >= 1");
}

SimulationConfig SimulationConfig::desk_scale() {
  SimulationConfig cfg;
  cfg.settings = 40;
  cfg.num_uavs = 8;
  cfg.data.data_per_uav = 128;
  cfg.radio.m_samples = 512;
  cfg.radio.fs_hz = 51.2e6;
  return cfg;
}

}  // namespace fedsense
