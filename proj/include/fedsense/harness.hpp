#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsense/config.hpp"

namespace fedsense::harness {

/// Parses a `key = value` document on top of `base`. Blank lines and text
/// after '#' are ignored. Throws ParseError (with line number) on malformed
/// lines, unknown keys or unreadable values, and ValidationError when the
/// resulting configuration is inconsistent.
SimulationConfig parse_config(std::string_view text,
                              const SimulationConfig& base = {});
SimulationConfig load_config(const std::filesystem::path& path,
                             const SimulationConfig& base = {});

/// Every key, one per line, in a form parse_config reads back exactly.
std::string serialize_config(const SimulationConfig& cfg);

struct Summary {
  double mean = 0.0;
  double ci95 = 0.0;  // Student-t half-width; 0 for a single sample

  friend bool operator==(const Summary&, const Summary&) = default;
};

/// Throws ValidationError on an empty sample.
Summary summarize(std::span<const double> samples);

enum class Axis : std::uint8_t { Ptx, NumUavs, RicianK, DataPerUav };

std::string_view to_string(Axis axis) noexcept;
Axis parse_axis(std::string_view text);
/// Sets the swept parameter. Count axes require positive whole numbers.
void apply_axis(SimulationConfig& cfg, Axis axis, double value);
/// Grid used when a sweep is requested without explicit values.
std::vector<double> default_values(Axis axis);

enum class Method : std::uint8_t { Baseline, FedAvg, FedSnr };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view text);
inline constexpr Method kAllMethods[] = {Method::Baseline, Method::FedAvg,
                                         Method::FedSnr};

/// Headline accuracy of one method on one configuration (seed included).
double run_method(const SimulationConfig& cfg, Method method);

struct SweepCell {
  double value = 0.0;
  Method method = Method::FedSnr;
  std::vector<double> samples;  // one per seed, in seed order
  Summary summary;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct SweepResult {
  Axis axis = Axis::Ptx;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;  // sorted by (value, method)

  const SweepCell* find(double value, Method method) const;
  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

struct SweepOptions {
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  // Called after each (value, seed, method) run with its accuracy.
  std::function<void(double value, std::uint64_t seed, Method method,
                     double accuracy)>
      progress;
  // Replaces run_method, e.g. to reuse cached runs.
  std::function<double(const SimulationConfig&, Method)> runner;
};

/// Runs every value x seed x method cell. Throws ValidationError on an empty
/// grid or seed list.
SweepResult sweep(const SimulationConfig& cfg, Axis axis,
                  std::span<const double> values,
                  std::span<const std::uint64_t> seeds,
                  const SweepOptions& options = {});

/// `axis,value,method,mean_accuracy,ci95,seeds` with 6-decimal numbers and
/// ';'-separated seeds.
std::string format_csv(const SweepResult& result);
/// Throws IoError when the file cannot be written.
void export_csv(const SweepResult& result, const std::filesystem::path& path);

/// Command-line entry point: 0 on success, 1 on usage errors, 2 on runtime
/// failures.
int cli_main(int argc, const char* const* argv);

}  // namespace fedsense::harness
