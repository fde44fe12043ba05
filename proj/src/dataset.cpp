#include "fedsense/dataset.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "fedsense/binary_io.hpp"
#include "fedsense/error.hpp"
#include "fedsense/waveform.hpp"

namespace fedsense::dataset {

Scene make_scene(const SimulationConfig& cfg, const Rng& rng) {
  Scene scene;
  Rng geometry_stream = rng.derive("geometry");
  scene.geometry = geometry::make_scene_geometry(
      cfg.num_uavs, cfg.d_min, cfg.bounds, cfg.radar_altitude, geometry_stream,
      cfg.packing_retries);
  scene.channels.reserve(cfg.num_uavs);
  for (std::size_t i = 0; i < cfg.num_uavs; ++i) {
    Rng stream = rng.derive("channel", i);
    scene.channels.push_back(channel::realize(
        scene.geometry.distances[i], scene.geometry.elevations[i], cfg.radio,
        cfg.path_loss, i, stream));
  }
  return scene;
}

namespace {

Example pack(std::span<const waveform::Complex> y, Label label,
             const channel::RadioConfig& radio) {
  const std::size_t m = y.size();
  const double scale = 1.0 / std::sqrt(radio.input_ref_w());
  Example e;
  e.label = label;
  e.x.resize(2 * m);
  for (std::size_t n = 0; n < m; ++n) {
    e.x[n] = static_cast<float>(y[n].real() * scale);
    e.x[m + n] = static_cast<float>(y[n].imag() * scale);
  }
  return e;
}

ExampleDraw present(const waveform::WaveformSpec& spec,
                    const channel::ChannelRealization& ch,
                    const channel::RadioConfig& radio, Rng& rng) {
  const std::size_t m = radio.m_samples;
  const auto s = waveform::synthesize(spec, m, radio.fs_hz);
  double energy = 0.0;
  for (const auto& v : s) energy += std::norm(v);
  ExampleDraw draw;
  draw.signal_power_w = ch.rx_power_w * std::norm(ch.fading_gain) * energy /
                        static_cast<double>(m);
  draw.example = pack(channel::apply_channel(s, ch, radio, rng), kPresent, radio);
  return draw;
}

}  // namespace

ExampleDraw draw_example(const channel::ChannelRealization& ch,
                         const channel::RadioConfig& radio, double p_h1,
                         Rng& rng, std::optional<Label> forced) {
  const Label label = forced.value_or(rng.bernoulli(p_h1) ? kPresent : kAbsent);
  if (label == kPresent) {
    const auto spec = waveform::random_spec(rng, radio.m_samples, radio.fs_hz);
    return present(spec, ch, radio, rng);
  }
  const std::vector<waveform::Complex> silence(radio.m_samples);
  ExampleDraw draw;
  draw.example = pack(channel::apply_channel(silence, ch, radio, rng), kAbsent, radio);
  return draw;
}

ExampleDraw draw_example(const waveform::WaveformSpec& spec,
                         const channel::ChannelRealization& ch,
                         const channel::RadioConfig& radio, Rng& rng) {
  waveform::validate(spec, radio.fs_hz);
  return present(spec, ch, radio, rng);
}

Example make_example(const channel::ChannelRealization& ch,
                     const channel::RadioConfig& radio, double p_h1, Rng& rng,
                     std::optional<Label> forced) {
  return draw_example(ch, radio, p_h1, rng, forced).example;
}

ClientDataset make_client_dataset(const Scene& scene, std::size_t uav,
                                  const SimulationConfig& cfg, const Rng& rng) {
  if (uav >= scene.size()) {
    throw ValidationError("UAV index " + std::to_string(uav) +
                          " out of range for a scene of " +
                          std::to_string(scene.size()));
  }
  const std::size_t b = cfg.data.data_per_uav;
  if (b == 0) throw EmptyDataset("data_per_uav is 0");

  const auto& ch = scene.channels[uav];
  ClientDataset ds;
  ds.uav_index = uav;
  ds.sample_count = b;
  ds.train.reserve(b);

  double signal_power = 0.0;
  std::size_t present = 0;
  for (std::size_t j = 0; j < b; ++j) {
    Rng stream = rng.derive("train", j);
    auto draw = draw_example(ch, cfg.radio, cfg.data.p_h1, stream);
    if (draw.example.label == kPresent) {
      signal_power += draw.signal_power_w;
      ++present;
    }
    ds.train.push_back(std::move(draw.example));
  }
  const std::size_t n_test = cfg.test_per_uav();
  ds.test.reserve(n_test);
  for (std::size_t j = 0; j < n_test; ++j) {
    Rng stream = rng.derive("test", j);
    ds.test.push_back(make_example(ch, cfg.radio, cfg.data.p_h1, stream));
  }

  ds.snr_linear = ch.snr_linear;
  if (present > 0 && ch.noise_power_w > 0.0) {
    const double realized =
        signal_power / static_cast<double>(present) / ch.noise_power_w;
    if (realized > 0.0 && std::isfinite(realized)) ds.snr_linear = realized;
  }
  return ds;
}

void write_cache(std::ostream& out, std::span<const ClientDataset> clients,
                 std::uint64_t seed) {
  const std::size_t n = clients.size();
  const std::size_t b = n > 0 ? clients.front().train.size() : 0;
  const std::size_t m = b > 0 ? clients.front().train.front().length() : 0;
  for (const auto& c : clients) {
    if (c.train.size() != b) {
      throw ShapeMismatch("cache requires equal B for every client");
    }
    for (const auto& e : c.train) {
      if (e.length() != m) throw ShapeMismatch("cache requires equal M");
    }
  }
  io::put_magic(out, "FSDS");
  io::put_le<std::uint32_t>(out, kCacheVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m));
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(b));
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  io::put_le<std::uint64_t>(out, seed);
  for (const auto& c : clients) {
    for (const auto& e : c.train) {
      for (float v : e.x) io::put_f32(out, v);
    }
  }
  for (const auto& c : clients) {
    for (const auto& e : c.train) io::put_le<std::uint8_t>(out, e.label);
  }
  if (!out) throw IoError("failed writing dataset cache");
}

DatasetCache read_cache(std::istream& in) {
  io::expect_magic(in, "FSDS");
  const auto version = io::get_le<std::uint32_t>(in);
  if (version != kCacheVersion) {
    throw IoError("unsupported cache version " + std::to_string(version));
  }
  DatasetCache cache;
  cache.m = io::get_le<std::uint32_t>(in);
  cache.b = io::get_le<std::uint32_t>(in);
  cache.n = io::get_le<std::uint32_t>(in);
  cache.seed = io::get_le<std::uint64_t>(in);
  const std::size_t total = static_cast<std::size_t>(cache.n) * cache.b;
  cache.examples.resize(total);
  for (auto& e : cache.examples) {
    e.x.resize(2 * static_cast<std::size_t>(cache.m));
    for (auto& v : e.x) v = io::get_f32(in);
  }
  for (auto& e : cache.examples) {
    e.label = io::get_le<std::uint8_t>(in);
    if (e.label > kPresent) throw IoError("invalid label byte in cache");
  }
  return cache;
}

void save_cache(const std::filesystem::path& path,
                std::span<const ClientDataset> clients, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_cache(out, clients, seed);
}

DatasetCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_cache(in);
}

}  // namespace fedsense::dataset
