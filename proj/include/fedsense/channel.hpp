#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedsense/random.hpp"

namespace fedsense::channel {

using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

// Angle-dependent air-to-ground path loss. Angles are in degrees.
struct PathLossParams {
  double alpha = 3.04;    // terrestrial path loss exponent
  double beta = -23.29;   // excess path loss scaler, dB
  double theta0 = -3.61;  // angle offset, deg
  double zeta = 4.14;     // angle scaler, deg
  double nu0 = 20.70;     // excess path loss offset, dB
  double eta = -0.41;     // shadowing slope, dB/deg
  double sigma0 = 5.86;   // shadowing offset, dB

  void validate() const;

  friend bool operator==(const PathLossParams&, const PathLossParams&) = default;
};

struct RadioConfig {
  double ptx_dbm = 5.0;
  double n0_dbm = -93.0;
  double fc_hz = 10e9;
  double fs_hz = 300e6;
  std::size_t m_samples = 3000;
  double k_rician = 10.0;
  double vmax_mps = 44.0;
  // Power that maps to unit amplitude at the network input. Unset means the
  // nominal noise floor, i.e. samples are expressed relative to N0.
  std::optional<double> input_ref_dbm;
  // Optional per-UAV noise-floor offsets (dB); UAVs past the end use 0.
  std::vector<double> n0_offsets_db;

  double input_ref_w() const;
  double noise_power_w(std::size_t uav) const;
  void validate() const;

  friend bool operator==(const RadioConfig&, const RadioConfig&) = default;
};

struct ChannelRealization {
  double path_loss_db = 0.0;
  Complex fading_gain{1.0, 0.0};
  double doppler_hz = 0.0;
  double velocity = 0.0;     // m/s, closing
  double snr_linear = 1.0;   // average received power over noise floor
  double rx_power_w = 0.0;   // average received power
  double noise_power_w = 0.0;
};

struct SnrResult {
  double rx_power_w;
  double snr_linear;
};

double dbm_to_watts(double dbm) noexcept;
double watts_to_dbm(double watts) noexcept;
double linear_to_db(double ratio) noexcept;

// Log-distance term plus angle-dependent excess loss, without shadowing.
double mean_path_loss_db(double d, double theta, const PathLossParams& p);

// eta * theta + sigma0, in dB. May be negative for steep angles.
double shadowing_std_db(double theta, const PathLossParams& p) noexcept;

/// Full path loss including a log-normal shadowing draw.
/// Throws InvalidDistance when d <= 0 and NegativeStd when the shadowing
/// standard deviation at `theta` is negative.
double path_loss_db(double d, double theta, const PathLossParams& p,
                    Rng& rng);

/// Rician small-scale gain with unit mean power. k = 0 is Rayleigh.
Complex rician_fading(double k, Rng& rng);

double doppler_hz(double v, double fc_hz);

/// Received power and linear SNR. Results underflowing to zero are clamped
/// to the smallest positive normal double.
SnrResult snr(double ptx_dbm, double pl_db, double n0_dbm);

/// Draws one setting's realization for a UAV at (d, theta). Shadowing
/// uses max(0, eta * theta + sigma0) so steep geometries stay drawable.
ChannelRealization realize(double d, double theta, const RadioConfig& radio,
                           const PathLossParams& p, std::size_t uav,
                           Rng& rng);

/// y[n] = sqrt(P_rx) h s[n] exp(j 2 pi f_d n / f_s) + w[n],
/// w ~ CN(0, noise_power_w). Throws LengthMismatch if s.size() != M.
std::vector<Complex> apply_channel(std::span<const Complex> s,
                                   const ChannelRealization& ch,
                                   const RadioConfig& radio, Rng& rng);

}  // namespace fedsense::channel
