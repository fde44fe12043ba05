#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fedsense/channel.hpp"
#include "fedsense/config.hpp"
#include "fedsense/geometry.hpp"
#include "fedsense/random.hpp"
#include "fedsense/waveform.hpp"

namespace fedsense::dataset {

enum Label : std::uint8_t { kAbsent = 0, kPresent = 1 };

// One sensing window: 2 x M matrix, row 0 = Re(y), row 1 = Im(y), in units
// of sqrt(input reference power).
struct Example {
  std::vector<float> x;
  std::uint8_t label = kAbsent;

  std::size_t length() const noexcept { return x.size() / 2; }
  std::span<const float> real() const { return {x.data(), length()}; }
  std::span<const float> imag() const { return {x.data() + length(), length()}; }
};

struct ClientDataset {
  std::size_t uav_index = 0;
  std::vector<Example> train;
  std::vector<Example> test;
  double snr_linear = 0.0;  // realized SNR over the H1 training windows
  std::size_t sample_count = 0;
};

// One setting: geometry plus each UAV's channel for the whole setting.
struct Scene {
  geometry::SceneGeometry geometry;
  std::vector<channel::ChannelRealization> channels;

  std::size_t size() const noexcept { return channels.size(); }
};

/// Geometry and per-UAV channels for one setting. UAV i's channel is drawn
/// from rng.derive("channel", i).
Scene make_scene(const SimulationConfig& cfg, const Rng& rng);

struct ExampleDraw {
  Example example;
  double signal_power_w = 0.0;  // noiseless received power, 0 under H0
};

/// Draws the hypothesis (or uses `forced`), synthesizes a random radar
/// waveform under H1, and passes it through the channel.
ExampleDraw draw_example(const channel::ChannelRealization& ch,
                         const channel::RadioConfig& radio, double p_h1,
                         Rng& rng, std::optional<Label> forced = std::nullopt);

/// H1 window carrying the given waveform instead of a random one.
ExampleDraw draw_example(const waveform::WaveformSpec& spec,
                         const channel::ChannelRealization& ch,
                         const channel::RadioConfig& radio, Rng& rng);

Example make_example(const channel::ChannelRealization& ch,
                     const channel::RadioConfig& radio, double p_h1, Rng& rng,
                     std::optional<Label> forced = std::nullopt);

/// B training and round(B * test_fraction) held-out windows for one UAV
/// under its fixed realization. Example j uses rng.derive("train"|"test", j).
/// Throws EmptyDataset when B == 0.
ClientDataset make_client_dataset(const Scene& scene, std::size_t uav,
                                  const SimulationConfig& cfg, const Rng& rng);

// Cache file, little-endian:
//   "FSDS" | u32 version | u32 M | u32 B | u32 N | u64 seed
//   N*B examples of 2*M f32 (row-major, client-major) | N*B u8 labels
inline constexpr std::uint32_t kCacheVersion = 1;

struct DatasetCache {
  std::uint32_t m = 0;
  std::uint32_t b = 0;
  std::uint32_t n = 0;
  std::uint64_t seed = 0;
  std::vector<Example> examples;  // client-major, N*B entries
};

void write_cache(std::ostream& out, std::span<const ClientDataset> clients,
                 std::uint64_t seed);
DatasetCache read_cache(std::istream& in);
void save_cache(const std::filesystem::path& path,
                std::span<const ClientDataset> clients, std::uint64_t seed);
DatasetCache load_cache(const std::filesystem::path& path);

}  // namespace fedsense::dataset
