#include "fedsense/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fedsense/error.hpp"

namespace fedsense::waveform {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const char* what) {
  if (!ok) throw InvalidWaveform(what);
}

// Phase of a linear sweep from offset - B/2 to offset + B/2 over `length`
// samples, evaluated at local sample index `n`.
double sweep_phase(double n, double length, double bandwidth_hz,
                   double offset_hz, double fs_hz) {
  const double t = n / fs_hz;
  const double duration = length / fs_hz;
  const double start = offset_hz - bandwidth_hz / 2.0;
  return kTwoPi * (start * t + bandwidth_hz / (2.0 * duration) * t * t);
}

}  // namespace

std::string_view to_string(Kind kind) noexcept {
  switch (kind) {
    case Kind::CW: return "cw";
    case Kind::FMCW: return "fmcw";
    case Kind::Pulse: return "pulse";
    case Kind::Chirp: return "chirp";
    case Kind::PhaseCoded: return "phase_coded";
  }
  return "unknown";
}

void validate(const WaveformSpec& spec, double fs_hz) {
  require(fs_hz > 0.0, "sampling frequency must be positive");
  const double nyquist = fs_hz / 2.0;
  const double half_bw = spec.bandwidth_hz / 2.0;
  require(spec.bandwidth_hz >= 0.0, "bandwidth must be non-negative");
  require(std::abs(spec.offset_hz) + half_bw < nyquist,
          "waveform occupies frequencies outside (-fs/2, fs/2)");
  switch (spec.kind) {
    case Kind::CW:
      break;
    case Kind::Chirp:
      require(spec.bandwidth_hz > 0.0, "chirp bandwidth must be positive");
      break;
    case Kind::FMCW:
      require(spec.bandwidth_hz > 0.0, "FMCW bandwidth must be positive");
      require(spec.period_samples >= 1, "FMCW period must be >= 1 sample");
      break;
    case Kind::Pulse:
      require(spec.duty > 0.0 && spec.duty <= 1.0, "duty must be in (0, 1]");
      require(spec.period_samples >= 1, "pulse period must be >= 1 sample");
      break;
    case Kind::PhaseCoded:
      require(spec.chip_samples >= 1, "chip length must be >= 1");
      for (auto c : spec.code) require(c == 1 || c == -1, "code must be +-1");
      break;
  }
}

WaveformSpec WaveformSpec::continuous_wave(double offset_hz, double fs_hz) {
  WaveformSpec s;
  s.kind = Kind::CW;
  s.offset_hz = offset_hz;
  validate(s, fs_hz);
  return s;
}

WaveformSpec WaveformSpec::chirp(double bandwidth_hz, double fs_hz,
                                 double offset_hz) {
  WaveformSpec s;
  s.kind = Kind::Chirp;
  s.bandwidth_hz = bandwidth_hz;
  s.offset_hz = offset_hz;
  validate(s, fs_hz);
  return s;
}

WaveformSpec WaveformSpec::fmcw(double bandwidth_hz, std::size_t period_samples,
                                double fs_hz, double offset_hz) {
  WaveformSpec s;
  s.kind = Kind::FMCW;
  s.bandwidth_hz = bandwidth_hz;
  s.period_samples = period_samples;
  s.offset_hz = offset_hz;
  validate(s, fs_hz);
  return s;
}

WaveformSpec WaveformSpec::pulse(double offset_hz, std::size_t period_samples,
                                 double duty, double fs_hz) {
  WaveformSpec s;
  s.kind = Kind::Pulse;
  s.offset_hz = offset_hz;
  s.period_samples = period_samples;
  s.duty = duty;
  validate(s, fs_hz);
  return s;
}

WaveformSpec WaveformSpec::phase_coded(double offset_hz, std::size_t chip_samples,
                                       const PhaseCode& code, double fs_hz,
                                       bool barker) {
  WaveformSpec s;
  s.kind = Kind::PhaseCoded;
  s.offset_hz = offset_hz;
  s.chip_samples = chip_samples;
  s.code = code;
  s.barker = barker;
  validate(s, fs_hz);
  return s;
}

WaveformSpec random_spec(Rng& rng, std::size_t m, double fs_hz) {
  const auto kind = static_cast<Kind>(rng.uniform_int(0, kKindCount - 1));
  const double mm = static_cast<double>(m);
  auto samples_in = [&](double lo, double hi) {
    const double v = std::round(rng.uniform(lo, hi));
    return static_cast<std::size_t>(std::max(1.0, v));
  };
  switch (kind) {
    case Kind::CW:
      return WaveformSpec::continuous_wave(rng.uniform(-fs_hz / 4, fs_hz / 4),
                                           fs_hz);
    case Kind::Chirp:
      return WaveformSpec::chirp(rng.uniform(fs_hz / 20, fs_hz / 4), fs_hz);
    case Kind::FMCW: {
      const double bw = rng.uniform(fs_hz / 20, fs_hz / 4);
      const std::size_t period = samples_in(mm / 8, mm / 2);
      return WaveformSpec::fmcw(bw, period, fs_hz);
    }
    case Kind::Pulse: {
      const double f0 = rng.uniform(-fs_hz / 4, fs_hz / 4);
      const std::size_t period = samples_in(mm / 10, mm / 2);
      const double duty = rng.uniform(0.5, 1.0);
      return WaveformSpec::pulse(f0, period, duty, fs_hz);
    }
    case Kind::PhaseCoded: {
      const double f0 = rng.uniform(-fs_hz / 4, fs_hz / 4);
      const auto chip = static_cast<std::size_t>(rng.uniform_int(10, 100));
      const bool barker = rng.bernoulli(0.5);
      PhaseCode code = kBarker13;
      if (!barker) {
        for (auto& c : code) c = rng.bernoulli(0.5) ? 1 : -1;
      }
      return WaveformSpec::phase_coded(f0, chip, code, fs_hz, barker);
    }
  }
  throw InvalidWaveform("unreachable waveform kind");
}

std::vector<Complex> synthesize(const WaveformSpec& spec, std::size_t m,
                                double fs_hz) {
  if (m < 1) throw InvalidLength("synthesize: m must be >= 1");
  std::vector<Complex> s(m);
  const double carrier_step = kTwoPi * spec.offset_hz / fs_hz;

  switch (spec.kind) {
    case Kind::CW:
      for (std::size_t n = 0; n < m; ++n) {
        s[n] = std::polar(1.0, carrier_step * static_cast<double>(n));
      }
      break;
    case Kind::Chirp:
      for (std::size_t n = 0; n < m; ++n) {
        s[n] = std::polar(1.0, sweep_phase(static_cast<double>(n),
                                           static_cast<double>(m),
                                           spec.bandwidth_hz, spec.offset_hz,
                                           fs_hz));
      }
      break;
    case Kind::FMCW: {
      const std::size_t period = spec.period_samples;
      for (std::size_t n = 0; n < m; ++n) {
        s[n] = std::polar(1.0, sweep_phase(static_cast<double>(n % period),
                                           static_cast<double>(period),
                                           spec.bandwidth_hz, spec.offset_hz,
                                           fs_hz));
      }
      break;
    }
    case Kind::Pulse: {
      const std::size_t period = spec.period_samples;
      // Rounding up keeps the on-fraction >= duty, so peaks stay <= 1/sqrt(duty).
      const auto on_len = std::min(
          period, static_cast<std::size_t>(
                      std::ceil(spec.duty * static_cast<double>(period) - 1e-12)));
      for (std::size_t n = 0; n < m; ++n) {
        if (n % period < on_len) {
          s[n] = std::polar(1.0, carrier_step * static_cast<double>(n));
        }
      }
      break;
    }
    case Kind::PhaseCoded:
      for (std::size_t n = 0; n < m; ++n) {
        const auto chip = (n / spec.chip_samples) % kCodeLength;
        s[n] = static_cast<double>(spec.code[chip]) *
               std::polar(1.0, carrier_step * static_cast<double>(n));
      }
      break;
  }

  double energy = 0.0;
  for (const auto& v : s) energy += std::norm(v);
  if (energy > 0.0) {
    const double scale = std::sqrt(static_cast<double>(m) / energy);
    for (auto& v : s) v *= scale;
  }
  return s;
}

}  // namespace fedsense::waveform
