#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fedsense/channel.hpp"
#include "fedsense/error.hpp"

using namespace fedsense;
using namespace fedsense::channel;

TEST_SUITE("channel") {

TEST_CASE("deterministic path loss examples") {
  const PathLossParams p;
  CHECK(mean_path_loss_db(1.0, p.theta0, p) == doctest::Approx(20.70).epsilon(1e-12));

  // Independent scalar evaluation at d = 1000 m, theta = 0 deg.
  const double off = 0.0 - (-3.61);
  const double oracle = 10.0 * 3.04 * 3.0 + (-23.29) * off * std::exp(-off / 4.14) + 20.70;
  CHECK(mean_path_loss_db(1000.0, 0.0, p) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::abs(mean_path_loss_db(1000.0, 0.0, p) - 76.75) <= 0.01);
}

TEST_CASE("path loss errors") {
  const PathLossParams p;
  Rng rng(1);
  CHECK_THROWS_AS(path_loss_db(0.0, 0.0, p, rng), InvalidDistance);
  CHECK_THROWS_AS(path_loss_db(-5.0, 0.0, p, rng), InvalidDistance);
  // eta * 20 + sigma0 = -2.34 dB
  CHECK_THROWS_AS(path_loss_db(100.0, 20.0, p, rng), NegativeStd);
}

TEST_CASE("shadowing moments") {
  const PathLossParams p;
  Rng rng(2);
  const double theta = 5.0;
  const double mean = mean_path_loss_db(800.0, theta, p);
  const double std_db = p.eta * theta + p.sigma0;
  const int n = 100000;
  double s = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = path_loss_db(800.0, theta, p, rng) - mean;
    s += x;
    sq += x * x;
  }
  const double m = s / n;
  const double sd = std::sqrt(sq / n - m * m);
  CHECK(std::abs(m) <= 3.0 * std_db / std::sqrt(double(n)));
  CHECK(std::abs(sd / std_db - 1.0) <= 0.02);
}

TEST_CASE("Rician fading normalization and K estimate") {
  Rng big(3);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(std::abs(rician_fading(1e9, big)) - 1.0) <= 1e-3);
  }
  for (double k : {0.0, 1.0, 10.0, 100.0}) {
    Rng rng(static_cast<std::uint64_t>(k) + 10);
    const int n = 100000;
    double m1 = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double p = std::norm(rician_fading(k, rng));
      m1 += p;
      m2 += p * p;
    }
    m1 /= n;
    m2 /= n;
    CHECK(std::abs(m1 - 1.0) <= 0.02);
    if (k == 10.0) {
      // Method-of-moments K from the power's normalized variance.
      const double g = (m2 - m1 * m1) / (m1 * m1);
      const double r = std::sqrt(1.0 - g);
      const double k_hat = r / (1.0 - r);
      CHECK(k_hat >= 9.0);
      CHECK(k_hat <= 11.0);
    }
  }
}

TEST_CASE("Doppler examples") {
  CHECK(doppler_hz(0.0, 10e9) == 0.0);
  CHECK(doppler_hz(kSpeedOfLight, 10e9) == doctest::Approx(10e9));
  CHECK(doppler_hz(44.0, 10e9) == doctest::Approx(44.0 / 2.99792458e8 * 1e10).epsilon(1e-12));
  CHECK(doppler_hz(44.0, 10e9) == doctest::Approx(1467.7).epsilon(1e-4));
}

TEST_CASE("SNR examples") {
  CHECK(snr(-93.0, 0.0, -93.0).snr_linear == doctest::Approx(1.0));
  const auto r = snr(5.0, 76.75, -93.0);
  CHECK(watts_to_dbm(r.rx_power_w) == doctest::Approx(-71.75));
  CHECK(linear_to_db(r.snr_linear) == doctest::Approx(21.25));
  CHECK(r.snr_linear == doctest::Approx(std::pow(10.0, 2.125)));
  CHECK(r.snr_linear == doctest::Approx(133.4).epsilon(1e-3));
  CHECK(dbm_to_watts(-93.0) == doctest::Approx(std::pow(10.0, -12.3)));
  CHECK(snr(5.0, 2000.0, -93.0).snr_linear > 0.0);
}

TEST_CASE("SNR monotonicity") {
  double prev = snr(5.0, 40.0, -93.0).snr_linear;
  for (double pl = 41.0; pl < 140.0; pl += 1.0) {
    const double cur = snr(5.0, pl, -93.0).snr_linear;
    CHECK(cur < prev);
    prev = cur;
  }
  prev = snr(-20.0, 90.0, -93.0).snr_linear;
  for (double ptx = -19.0; ptx <= 30.0; ptx += 1.0) {
    const double cur = snr(ptx, 90.0, -93.0).snr_linear;
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("Doppler bound over realizations") {
  RadioConfig radio;
  const PathLossParams p;
  const double bound = radio.vmax_mps / kSpeedOfLight * radio.fc_hz;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    Rng rng(s);
    const auto ch = realize(900.0, 3.0, radio, p, 0, rng);
    CHECK(ch.doppler_hz >= 0.0);
    CHECK(ch.doppler_hz <= bound);
    CHECK(ch.snr_linear > 0.0);
    CHECK(ch.rx_power_w > 0.0);
  }
}

TEST_CASE("H0 input yields the noise floor") {
  RadioConfig radio;
  ChannelRealization ch;
  ch.noise_power_w = radio.noise_power_w(0);
  ch.rx_power_w = 1e-9;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const std::vector<Complex> zero(radio.m_samples);
    const auto y = apply_channel(zero, ch, radio, rng);
    double power = 0.0;
    for (auto v : y) power += std::norm(v);
    power /= static_cast<double>(y.size());
    CHECK(std::abs(power / dbm_to_watts(-93.0) - 1.0) <= 0.05);
  }
}

TEST_CASE("noiseless channel is a pure gain") {
  RadioConfig radio;
  radio.m_samples = 16;
  ChannelRealization ch;
  ch.noise_power_w = 0.0;
  ch.rx_power_w = 4e-8;
  ch.fading_gain = {1.0, 0.0};
  ch.doppler_hz = 0.0;
  std::vector<Complex> s(16);
  for (std::size_t n = 0; n < s.size(); ++n) s[n] = std::polar(1.0, 0.3 * double(n));
  Rng rng(1);
  const auto y = apply_channel(s, ch, radio, rng);
  for (std::size_t n = 0; n < s.size(); ++n) {
    CHECK(std::abs(y[n] - std::sqrt(4e-8) * s[n]) <= 1e-18);
  }
}

TEST_CASE("quarter-rate Doppler rotates by 90 degrees per sample") {
  RadioConfig radio;
  radio.m_samples = 8;
  ChannelRealization ch;
  ch.noise_power_w = 0.0;
  ch.rx_power_w = 1.0;
  ch.doppler_hz = radio.fs_hz / 4.0;
  const std::vector<Complex> ones(8, Complex{1.0, 0.0});
  Rng rng(1);
  const auto y = apply_channel(ones, ch, radio, rng);
  for (std::size_t n = 0; n < 8; ++n) {
    const Complex expected = std::polar(1.0, std::numbers::pi / 2.0 * double(n));
    CHECK(std::abs(y[n] - expected) <= 1e-12);
  }
}

TEST_CASE("length mismatch") {
  RadioConfig radio;
  ChannelRealization ch;
  Rng rng(1);
  const std::vector<Complex> s(radio.m_samples - 1);
  CHECK_THROWS_AS(apply_channel(s, ch, radio, rng), LengthMismatch);
}

TEST_CASE("per-UAV noise offsets") {
  RadioConfig radio;
  radio.n0_offsets_db = {3.0};
  CHECK(radio.noise_power_w(0) == doctest::Approx(dbm_to_watts(-90.0)));
  CHECK(radio.noise_power_w(5) == doctest::Approx(dbm_to_watts(-93.0)));
}

}
