#include "fedsense/random.hpp"

#include <cmath>

namespace fedsense {

namespace {

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng Rng::derive(std::string_view tag, std::uint64_t a, std::uint64_t b) const {
  std::uint64_t h = splitmix64(seed_ ^ fnv1a(tag));
  h = splitmix64(h ^ a);
  h = splitmix64(h + 0x632be59bd9b4e019ULL * (b + 1));
  return Rng(h);
}

double Rng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
  if (stddev == 0.0) return mean;
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::complex<double> Rng::complex_normal(double power) {
  const double s = std::sqrt(power / 2.0);
  std::normal_distribution<double> dist(0.0, 1.0);
  const double re = dist(engine_);
  const double im = dist(engine_);
  return {s * re, s * im};
}

bool Rng::bernoulli(double p) {
  return std::bernoulli_distribution(p)(engine_);
}

std::uint64_t Rng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
}

std::uint64_t Rng::poisson(double mean) {
  return std::poisson_distribution<std::uint64_t>(mean)(engine_);
}

}  // namespace fedsense
