#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fedsense/random.hpp"

namespace fedsense::waveform {

using Complex = std::complex<double>;

enum class Kind : std::uint8_t { CW, FMCW, Pulse, Chirp, PhaseCoded };
inline constexpr std::size_t kKindCount = 5;

std::string_view to_string(Kind kind) noexcept;

inline constexpr std::size_t kCodeLength = 13;
using PhaseCode = std::array<std::int8_t, kCodeLength>;
inline constexpr PhaseCode kBarker13 = {1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1};

// Kind-specific parameters. Fields not used by a kind stay at their defaults.
// Build through the factory functions below; they enforce the invariants.
struct WaveformSpec {
  Kind kind = Kind::CW;
  double offset_hz = 0.0;     // carrier offset (CW, Pulse, PhaseCoded, sweep centre)
  double bandwidth_hz = 0.0;  // sweep bandwidth (Chirp, FMCW)
  std::size_t period_samples = 0;  // FMCW sweep period, Pulse repetition period
  double duty = 1.0;               // Pulse on fraction
  std::size_t chip_samples = 0;    // PhaseCoded chip length
  PhaseCode code{};
  bool barker = false;

  static WaveformSpec continuous_wave(double offset_hz, double fs_hz);
  static WaveformSpec chirp(double bandwidth_hz, double fs_hz,
                            double offset_hz = 0.0);
  static WaveformSpec fmcw(double bandwidth_hz, std::size_t period_samples,
                           double fs_hz, double offset_hz = 0.0);
  static WaveformSpec pulse(double offset_hz, std::size_t period_samples,
                            double duty, double fs_hz);
  static WaveformSpec phase_coded(double offset_hz, std::size_t chip_samples,
                                  const PhaseCode& code, double fs_hz,
                                  bool barker = false);
};

/// Throws InvalidWaveform if `spec` violates a band or shape invariant.
void validate(const WaveformSpec& spec, double fs_hz);

/// Random kind (uniform over the five) with randomized parameters sized for
/// an `m`-sample window at `fs_hz`.
WaveformSpec random_spec(Rng& rng, std::size_t m, double fs_hz);

/// m baseband samples s[n] = s(n / fs) with average power exactly 1.
std::vector<Complex> synthesize(const WaveformSpec& spec, std::size_t m,
                                double fs_hz);

}  // namespace fedsense::waveform
