#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace fedsense {

// Seeded random stream. Child streams are a pure function of
// (seed, tag, indices), never of how much of the parent has been consumed,
// so adding draws in one place cannot shift another component's randomness.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng derive(std::string_view tag, std::uint64_t a = 0,
             std::uint64_t b = 0) const;

  std::uint64_t next() { return engine_(); }

  // Uniform on [lo, hi). Returns lo when lo == hi.
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  // Circularly-symmetric complex Gaussian with E|z|^2 = power.
  std::complex<double> complex_normal(double power);
  bool bernoulli(double p);
  // Uniform integer on [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  std::uint64_t poisson(double mean);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace fedsense
