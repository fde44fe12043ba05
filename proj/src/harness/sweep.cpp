#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "fedsense/error.hpp"
#include "fedsense/federated.hpp"
#include "fedsense/harness.hpp"

namespace fedsense::harness {

Summary summarize(std::span<const double> samples) {
  if (samples.empty()) throw ValidationError("cannot summarize an empty sample");
  const auto n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  Summary s;
  s.mean = sum / n;
  if (samples.size() < 2) return s;
  double sq = 0.0;
  for (double v : samples) sq += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(sq / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  s.ci95 = boost::math::quantile(dist, 0.975) * sd / std::sqrt(n);
  return s;
}

std::string_view to_string(Axis axis) noexcept {
  switch (axis) {
    case Axis::Ptx: return "ptx";
    case Axis::NumUavs: return "num_uavs";
    case Axis::RicianK: return "rician_k";
    case Axis::DataPerUav: return "data_per_uav";
  }
  return "ptx";
}

Axis parse_axis(std::string_view text) {
  for (Axis a : {Axis::Ptx, Axis::NumUavs, Axis::RicianK, Axis::DataPerUav}) {
    if (to_string(a) == text) return a;
  }
  throw ValidationError("unknown axis '" + std::string(text) +
                        "' (expected ptx, num_uavs, rician_k or data_per_uav)");
}

void apply_axis(SimulationConfig& cfg, Axis axis, double value) {
  auto whole = [&](std::string_view name) {
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw ValidationError(std::string(name) + " must be a positive integer");
    }
    return static_cast<std::size_t>(value);
  };
  switch (axis) {
    case Axis::Ptx: cfg.radio.ptx_dbm = value; break;
    case Axis::NumUavs: cfg.num_uavs = whole("num_uavs"); break;
    case Axis::RicianK: cfg.radio.k_rician = value; break;
    case Axis::DataPerUav: cfg.data.data_per_uav = whole("data_per_uav"); break;
  }
}

std::vector<double> default_values(Axis axis) {
  switch (axis) {
    case Axis::Ptx: return {-5, 0, 5, 10, 15, 20};
    case Axis::NumUavs: return {2, 4, 8, 16};
    case Axis::RicianK: return {0, 1, 10};
    case Axis::DataPerUav: return {32, 64, 128, 256};
  }
  return {};
}

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::Baseline: return "baseline";
    case Method::FedAvg: return "fedavg";
    case Method::FedSnr: return "fedsnr";
  }
  return "fedsnr";
}

Method parse_method(std::string_view text) {
  for (Method m : kAllMethods) {
    if (to_string(m) == text) return m;
  }
  throw ValidationError("unknown method '" + std::string(text) +
                        "' (expected baseline, fedavg or fedsnr)");
}

double run_method(const SimulationConfig& cfg, Method method) {
  if (method == Method::Baseline) {
    return federated::baseline_independent(cfg).mean_accuracy;
  }
  SimulationConfig c = cfg;
  c.aggregator = method == Method::FedAvg ? Aggregator::FedAvg : Aggregator::FedSnr;
  const auto result = federated::run_experiment(c);
  return federated::headline_accuracy(result.rounds);
}

const SweepCell* SweepResult::find(double value, Method method) const {
  for (const auto& c : cells) {
    if (c.value == value && c.method == method) return &c;
  }
  return nullptr;
}

SweepResult sweep(const SimulationConfig& cfg, Axis axis,
                  std::span<const double> values,
                  std::span<const std::uint64_t> seeds,
                  const SweepOptions& options) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  if (seeds.empty()) throw ValidationError("sweep needs at least one seed");
  if (options.methods.empty()) throw ValidationError("sweep needs at least one method");

  SweepResult result;
  result.axis = axis;
  result.values.assign(values.begin(), values.end());
  result.seeds.assign(seeds.begin(), seeds.end());

  std::vector<Method> methods = options.methods;
  std::sort(methods.begin(), methods.end(), [](Method a, Method b) {
    return to_string(a) < to_string(b);
  });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  std::vector<double> grid = result.values;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  for (double value : grid) {
    SimulationConfig base = cfg;
    apply_axis(base, axis, value);
    base.validate();
    for (Method method : methods) {
      SweepCell cell;
      cell.value = value;
      cell.method = method;
      for (std::uint64_t seed : seeds) {
        SimulationConfig run = base;
        run.seed = seed;
        const double acc =
            options.runner ? options.runner(run, method) : run_method(run, method);
        cell.samples.push_back(acc);
        if (options.progress) options.progress(value, seed, method, acc);
      }
      cell.summary = summarize(cell.samples);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::string format_csv(const SweepResult& result) {
  std::string seeds;
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    if (i > 0) seeds += ';';
    seeds += std::to_string(result.seeds[i]);
  }
  std::vector<const SweepCell*> rows;
  for (const auto& c : result.cells) rows.push_back(&c);
  std::stable_sort(rows.begin(), rows.end(), [](const SweepCell* a, const SweepCell* b) {
    if (a->value != b->value) return a->value < b->value;
    return to_string(a->method) < to_string(b->method);
  });

  std::string out = "axis,value,method,mean_accuracy,ci95,seeds\n";
  char buf[160];
  for (const SweepCell* c : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%s,%.6f,%.6f,",
                  std::string(to_string(result.axis)).c_str(), c->value,
                  std::string(to_string(c->method)).c_str(), c->summary.mean,
                  c->summary.ci95);
    out += buf;
    out += seeds;
    out += '\n';
  }
  return out;
}

void export_csv(const SweepResult& result, const std::filesystem::path& path) {
  const std::string text = format_csv(result);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace fedsense::harness
