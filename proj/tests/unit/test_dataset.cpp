#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fedsense/channel.hpp"
#include "fedsense/dataset.hpp"
#include "fedsense/error.hpp"

using namespace fedsense;
using namespace fedsense::dataset;

namespace {

SimulationConfig small_config() {
  SimulationConfig cfg = SimulationConfig::desk_scale();
  cfg.num_uavs = 4;
  cfg.data.data_per_uav = 16;
  cfg.radio.m_samples = 64;
  return cfg;
}

double power_w(const Example& e, const channel::RadioConfig& radio) {
  double p = 0.0;
  for (float v : e.x) p += double(v) * double(v);
  return p / double(e.length()) * radio.input_ref_w();
}

bool same(const Example& a, const Example& b) { return a.label == b.label && a.x == b.x; }

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("forced H0 window is noise at N0") {
  channel::RadioConfig radio;
  channel::ChannelRealization ch;
  ch.noise_power_w = radio.noise_power_w(0);
  ch.rx_power_w = 1e-6;
  Rng rng(1);
  const auto e = make_example(ch, radio, 0.5, rng, kAbsent);
  CHECK(e.label == kAbsent);
  REQUIRE(e.x.size() == 2 * radio.m_samples);
  CHECK(std::abs(power_w(e, radio) / channel::dbm_to_watts(-93.0) - 1.0) <= 0.1);
}

TEST_CASE("noiseless DC carrier packs into real and imaginary rows") {
  channel::RadioConfig radio;
  radio.m_samples = 32;
  radio.input_ref_dbm = 30.0;  // 1 W: samples in volts-per-sqrt-ohm units
  channel::ChannelRealization ch;
  ch.noise_power_w = 0.0;
  ch.rx_power_w = 2.5e-7;
  Rng rng(2);
  const auto draw = draw_example(waveform::WaveformSpec::continuous_wave(0.0, radio.fs_hz),
                                 ch, radio, rng);
  CHECK(draw.example.label == kPresent);
  const float amp = static_cast<float>(std::sqrt(2.5e-7));
  for (float v : draw.example.real()) CHECK(v == doctest::Approx(amp).epsilon(1e-6));
  for (float v : draw.example.imag()) CHECK(v == 0.0f);
  CHECK(draw.signal_power_w == doctest::Approx(2.5e-7));
}

TEST_CASE("labels follow p_H1") {
  channel::RadioConfig radio;
  radio.m_samples = 16;
  radio.fs_hz = 1.6e6;
  channel::ChannelRealization ch;
  ch.noise_power_w = radio.noise_power_w(0);
  ch.rx_power_w = 1e-10;
  Rng rng(3);
  int ones = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ones += make_example(ch, radio, 0.5, rng).label;
  CHECK(double(ones) / n >= 0.47);
  CHECK(double(ones) / n <= 0.53);
}

TEST_CASE("client dataset shape at full size") {
  SimulationConfig cfg;
  cfg.num_uavs = 2;
  cfg.radio.m_samples = 32;
  const Rng root(4);
  const auto scene = make_scene(cfg, root.derive("setting"));
  const auto ds = make_client_dataset(scene, 1, cfg, root.derive("data"));
  CHECK(ds.train.size() == 256);
  CHECK(ds.test.size() == 64);
  CHECK(ds.sample_count == 256);
  CHECK(ds.uav_index == 1);
  CHECK(ds.snr_linear > 0.0);
  for (const auto& e : ds.train) {
    CHECK(e.x.size() == 64);
    bool finite = true;
    for (float v : e.x) finite = finite && std::isfinite(v);
    CHECK(finite);
  }
}

TEST_CASE("empty and out-of-range requests") {
  auto cfg = small_config();
  const Rng root(5);
  const auto scene = make_scene(cfg, root);
  cfg.data.data_per_uav = 0;
  CHECK_THROWS_AS(make_client_dataset(scene, 0, cfg, root), EmptyDataset);
  cfg.data.data_per_uav = 8;
  CHECK_THROWS_AS(make_client_dataset(scene, 4, cfg, root), ValidationError);
}

TEST_CASE("datasets are reproducible and independent of generation order") {
  const auto cfg = small_config();
  const Rng root(6);
  const auto scene = make_scene(cfg, root.derive("setting"));
  std::vector<ClientDataset> forward_order;
  for (std::size_t i = 0; i < cfg.num_uavs; ++i) {
    forward_order.push_back(make_client_dataset(scene, i, cfg, root.derive("data", i)));
  }
  for (std::size_t k = cfg.num_uavs; k-- > 0;) {
    const auto again = make_client_dataset(scene, k, cfg, root.derive("data", k));
    REQUIRE(again.train.size() == forward_order[k].train.size());
    bool equal = again.snr_linear == forward_order[k].snr_linear;
    for (std::size_t j = 0; j < again.train.size(); ++j) {
      equal = equal && same(again.train[j], forward_order[k].train[j]);
    }
    for (std::size_t j = 0; j < again.test.size(); ++j) {
      equal = equal && same(again.test[j], forward_order[k].test[j]);
    }
    CHECK(equal);
  }
}

TEST_CASE("strong H1 windows stand above the noise floor") {
  channel::RadioConfig radio;
  radio.m_samples = 512;
  radio.fs_hz = 51.2e6;
  channel::ChannelRealization ch;
  ch.noise_power_w = radio.noise_power_w(0);
  ch.rx_power_w = ch.noise_power_w * 10.0;  // 10 dB
  ch.snr_linear = 10.0;
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto e = make_example(ch, radio, 1.0, rng, kPresent);
    CHECK(channel::linear_to_db(power_w(e, radio) / ch.noise_power_w) >= 5.0);
  }
}

TEST_CASE("realized SNR tracks the realization") {
  auto cfg = small_config();
  cfg.data.data_per_uav = 64;
  const Rng root(8);
  const auto scene = make_scene(cfg, root);
  for (std::size_t i = 0; i < cfg.num_uavs; ++i) {
    const auto ds = make_client_dataset(scene, i, cfg, root.derive("data", i));
    const auto& ch = scene.channels[i];
    const double expected = ch.rx_power_w * std::norm(ch.fading_gain) / ch.noise_power_w;
    CHECK(ds.snr_linear == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("cache round trip") {
  const auto cfg = small_config();
  const Rng root(9);
  const auto scene = make_scene(cfg, root);
  std::vector<ClientDataset> clients;
  for (std::size_t i = 0; i < cfg.num_uavs; ++i) {
    clients.push_back(make_client_dataset(scene, i, cfg, root.derive("data", i)));
  }
  std::stringstream buf;
  write_cache(buf, clients, 1234);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "FSDS");
  const std::size_t expected = 4 + 4 * 4 + 8 + cfg.num_uavs * 16 * (2 * 64 * 4 + 1);
  CHECK(bytes.size() == expected);

  const auto cache = read_cache(buf);
  CHECK(cache.m == 64);
  CHECK(cache.b == 16);
  CHECK(cache.n == cfg.num_uavs);
  CHECK(cache.seed == 1234);
  REQUIRE(cache.examples.size() == cfg.num_uavs * 16);
  bool equal = true;
  for (std::size_t i = 0; i < cfg.num_uavs; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      equal = equal && same(cache.examples[i * 16 + j], clients[i].train[j]);
    }
  }
  CHECK(equal);

  std::stringstream corrupt("FSDX....");
  CHECK_THROWS_AS(read_cache(corrupt), IoError);
}

}
