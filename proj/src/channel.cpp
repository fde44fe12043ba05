#include "fedsense/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fedsense/error.hpp"

namespace fedsense::channel {

void PathLossParams::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (zeta == 0.0) throw ValidationError("zeta must be non-zero");
  for (double v : {alpha, beta, theta0, zeta, nu0, eta, sigma0}) {
    if (!std::isfinite(v)) throw ValidationError("path loss params must be finite");
  }
  // The std must be usable somewhere in the elevation range.
  if (shadowing_std_db(0.0, *this) < 0.0) {
    throw ValidationError("shadowing std eta*theta+sigma0 is negative at 0 deg");
  }
}

double RadioConfig::input_ref_w() const {
  return dbm_to_watts(input_ref_dbm.value_or(n0_dbm));
}

double RadioConfig::noise_power_w(std::size_t uav) const {
  const double offset = uav < n0_offsets_db.size() ? n0_offsets_db[uav] : 0.0;
  return dbm_to_watts(n0_dbm + offset);
}

void RadioConfig::validate() const {
  if (!(fs_hz > 0.0)) throw ValidationError("fs_hz must be positive");
  if (m_samples < 1) throw ValidationError("m_samples must be >= 1");
  if (!(k_rician >= 0.0)) throw ValidationError("k_rician must be >= 0");
  if (!(vmax_mps >= 0.0)) throw ValidationError("vmax_mps must be >= 0");
  if (!(fc_hz > 0.0)) throw ValidationError("fc_hz must be positive");
  if (!std::isfinite(ptx_dbm) || !std::isfinite(n0_dbm)) {
    throw ValidationError("ptx_dbm and n0_dbm must be finite");
  }
}

double dbm_to_watts(double dbm) noexcept {
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double watts_to_dbm(double watts) noexcept {
  return 10.0 * std::log10(watts) + 30.0;
}

double linear_to_db(double ratio) noexcept { return 10.0 * std::log10(ratio); }

double mean_path_loss_db(double d, double theta, const PathLossParams& p) {
  if (!(d > 0.0)) {
    throw InvalidDistance("path loss needs d > 0, got " + std::to_string(d));
  }
  const double offset = theta - p.theta0;
  return 10.0 * p.alpha * std::log10(d) +
         p.beta * offset * std::exp(-offset / p.zeta) + p.nu0;
}

double shadowing_std_db(double theta, const PathLossParams& p) noexcept {
  return p.eta * theta + p.sigma0;
}

double path_loss_db(double d, double theta, const PathLossParams& p,
                    Rng& rng) {
  const double mean = mean_path_loss_db(d, theta, p);
  const double std_db = shadowing_std_db(theta, p);
  if (std_db < 0.0) {
    throw NegativeStd("shadowing std is negative (" + std::to_string(std_db) +
                      " dB) at theta=" + std::to_string(theta));
  }
  return mean + rng.normal(0.0, std_db);
}

Complex rician_fading(double k, Rng& rng) {
  const double los_amp = std::sqrt(k / (k + 1.0));
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const Complex scatter = rng.complex_normal(1.0 / (k + 1.0));
  return los_amp * std::polar(1.0, phi) + scatter;
}

double doppler_hz(double v, double fc_hz) { return v / kSpeedOfLight * fc_hz; }

SnrResult snr(double ptx_dbm, double pl_db, double n0_dbm) {
  constexpr double kFloor = std::numeric_limits<double>::min();
  const double rx_dbm = ptx_dbm - pl_db;
  const double rx_w = std::max(dbm_to_watts(rx_dbm), kFloor);
  const double ratio = std::max(std::pow(10.0, (rx_dbm - n0_dbm) / 10.0), kFloor);
  return {rx_w, ratio};
}

ChannelRealization realize(double d, double theta, const RadioConfig& radio,
                           const PathLossParams& p, std::size_t uav,
                           Rng& rng) {
  Rng shadow_stream = rng.derive("shadowing");
  Rng fading_stream = rng.derive("fading");
  Rng velocity_stream = rng.derive("velocity");

  ChannelRealization ch;
  const double std_db = std::max(0.0, shadowing_std_db(theta, p));
  ch.path_loss_db = mean_path_loss_db(d, theta, p) +
                    shadow_stream.normal(0.0, std_db);
  ch.fading_gain = rician_fading(radio.k_rician, fading_stream);
  ch.velocity = velocity_stream.uniform(0.0, radio.vmax_mps);
  ch.doppler_hz = doppler_hz(ch.velocity, radio.fc_hz);
  ch.noise_power_w = radio.noise_power_w(uav);
  const auto s = snr(radio.ptx_dbm, ch.path_loss_db,
                     watts_to_dbm(ch.noise_power_w));
  ch.rx_power_w = s.rx_power_w;
  ch.snr_linear = s.snr_linear;
  return ch;
}

std::vector<Complex> apply_channel(std::span<const Complex> s,
                                   const ChannelRealization& ch,
                                   const RadioConfig& radio, Rng& rng) {
  if (s.size() != radio.m_samples) {
    throw LengthMismatch("apply_channel: got " + std::to_string(s.size()) +
                         " samples, expected " +
                         std::to_string(radio.m_samples));
  }
  const Complex gain = std::sqrt(ch.rx_power_w) * ch.fading_gain;
  const double step = 2.0 * std::numbers::pi * ch.doppler_hz / radio.fs_hz;
  std::vector<Complex> y(s.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    Complex v{0.0, 0.0};
    if (s[n] != Complex{0.0, 0.0}) {
      v = gain * s[n] * std::polar(1.0, step * static_cast<double>(n));
    }
    y[n] = v + rng.complex_normal(ch.noise_power_w);
  }
  return y;
}

}  // namespace fedsense::channel
