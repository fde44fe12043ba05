#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fedsense/checkpoint.hpp"
#include "fedsense/error.hpp"
#include "fedsense/federated.hpp"
#include "fedsense/harness.hpp"
#include "fedsense/training.hpp"

namespace fedsense::harness {

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailure = 2;

struct Options {
  std::string config_path;
  std::string out_path;
  std::string checkpoint_path;
  std::optional<std::uint64_t> seed;
  std::string aggregator;
  bool desk = false;
  std::size_t workers = 0;

  std::string axis = "ptx";
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  std::size_t check_seeds = 5;
};

SimulationConfig effective_config(const Options& o) {
  SimulationConfig base = o.desk ? SimulationConfig::desk_scale() : SimulationConfig{};
  SimulationConfig cfg =
      o.config_path.empty() ? base : load_config(o.config_path, base);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.aggregator.empty()) cfg.aggregator = parse_aggregator(o.aggregator);
  if (o.workers > 0) cfg.workers = o.workers;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) throw IoError("failed writing " + path);
}

int cmd_run(const Options& o) {
  const SimulationConfig cfg = effective_config(o);
  const auto result = federated::run_experiment(cfg);
  std::ostringstream csv;
  csv << "round,aggregator,mean_accuracy\n";
  char buf[128];
  for (const auto& r : result.rounds) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.6f\n", r.round,
                  std::string(to_string(r.aggregator)).c_str(), r.mean_accuracy);
    csv << buf;
    std::printf("round %zu mean_accuracy %.6f\n", r.round, r.mean_accuracy);
  }
  std::printf("headline_accuracy %.6f\n", federated::headline_accuracy(result.rounds));
  if (!o.out_path.empty()) write_text(o.out_path, csv.str());
  if (!o.checkpoint_path.empty()) nn::save_checkpoint(o.checkpoint_path, result.global);
  return kOk;
}

int cmd_baseline(const Options& o) {
  const SimulationConfig cfg = effective_config(o);
  const auto result = federated::baseline_independent(cfg);
  std::ostringstream csv;
  csv << "uav,accuracy\n";
  char buf[128];
  for (std::size_t i = 0; i < result.accuracies.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", i, result.accuracies[i]);
    csv << buf;
    std::printf("uav %zu accuracy %.6f\n", i, result.accuracies[i]);
  }
  std::printf("mean_accuracy %.6f\n", result.mean_accuracy);
  if (!o.out_path.empty()) write_text(o.out_path, csv.str());
  return kOk;
}

int cmd_sweep(const Options& o) {
  const SimulationConfig cfg = effective_config(o);
  const Axis axis = parse_axis(o.axis);
  const std::vector<double> values = o.values.empty() ? default_values(axis) : o.values;
  std::vector<std::uint64_t> seeds = o.seeds;
  if (seeds.empty()) seeds.push_back(cfg.seed);

  SweepOptions opts;
  if (!o.methods.empty()) {
    opts.methods.clear();
    for (const auto& m : o.methods) opts.methods.push_back(parse_method(m));
  }
  opts.progress = [](double value, std::uint64_t seed, Method method, double acc) {
    std::fprintf(stderr, "value %g seed %llu %s accuracy %.6f\n", value,
                 static_cast<unsigned long long>(seed),
                 std::string(to_string(method)).c_str(), acc);
  };
  const SweepResult result = sweep(cfg, axis, values, seeds, opts);
  if (o.out_path.empty()) {
    std::fputs(format_csv(result).c_str(), stdout);
  } else {
    export_csv(result, o.out_path);
  }
  return kOk;
}

bool check_aggregators(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t m = 8;
  std::vector<federated::ClientUpdate> updates(3);
  for (auto& u : updates) {
    u.weights = nn::ModelWeights::zeros(m);
    for (auto& t : u.weights.tensors) {
      for (auto& v : t) v = static_cast<float>(rng.normal(0.0, 1.0));
    }
    u.sample_count = 1 + rng.uniform_int(0, 99);
    u.snr_linear = rng.uniform(0.1, 100.0);
  }
  bool ok = true;
  for (Aggregator rule : {Aggregator::FedAvg, Aggregator::FedSnr}) {
    const auto w = federated::aggregate(rule, updates);
    auto scaled = updates;
    for (auto& u : scaled) {
      u.sample_count *= 7;
      u.snr_linear *= 7.0;
    }
    const auto ws = federated::aggregate(rule, scaled);
    for (std::size_t t = 0; t < w.tensors.size(); ++t) {
      for (std::size_t j = 0; j < w.tensors[t].size(); ++j) {
        float lo = updates[0].weights.tensors[t][j];
        float hi = lo;
        for (const auto& u : updates) {
          lo = std::min(lo, u.weights.tensors[t][j]);
          hi = std::max(hi, u.weights.tensors[t][j]);
        }
        const float v = w.tensors[t][j];
        ok = ok && v >= lo && v <= hi;
        ok = ok && nn::relative_error(v, ws.tensors[t][j], 1e-6) <= 1e-6;
      }
    }
  }
  auto tied = updates;
  for (auto& u : tied) {
    u.sample_count = 5;
    u.snr_linear = 2.0;
  }
  ok = ok && federated::fed_avg(tied) == federated::fed_snr(tied);
  return ok;
}

int cmd_check(const Options& o) {
  bool ok = true;
  for (std::size_t s = 1; s <= o.check_seeds; ++s) {
    nn::GradientCheckConfig gc;
    gc.seed = s;
    const auto r = nn::gradient_check(gc);
    std::printf("gradient seed %zu: %zu checked, %zu failures, max rel %.3g (%s) %s\n",
                s, r.checked, r.failures, r.max_relative_error,
                *r.worst_tensor != '\0' ? r.worst_tensor : "-",
                r.passed() ? "PASS" : "FAIL");
    ok = ok && r.passed();
  }
  const bool agg = check_aggregators(o.seed.value_or(1));
  std::printf("aggregator invariants %s\n", agg ? "PASS" : "FAIL");
  ok = ok && agg;
  return ok ? kOk : kFailure;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Federated spectrum sensing simulator", "fedsense"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--config", o.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", o.out_path, "output file");
  app.add_option("--seed", o.seed, "master seed (FEDSENSE_SEED overrides)");
  app.add_option("--aggregator", o.aggregator, "aggregation rule")
      ->check(CLI::IsMember({"fedavg", "fedsnr"}));
  app.add_flag("--desk", o.desk, "start from the desk-scale defaults");
  app.add_option("--workers", o.workers, "clients trained concurrently")
      ->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "single federated experiment");
  run->add_option("--checkpoint", o.checkpoint_path, "save the final global model");
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep with confidence intervals");
  sweep_cmd->add_option("--axis", o.axis, "swept parameter")
      ->check(CLI::IsMember({"ptx", "num_uavs", "rician_k", "data_per_uav"}));
  sweep_cmd->add_option("--values", o.values, "grid values")->delimiter(',');
  sweep_cmd->add_option("--seeds", o.seeds, "seed list")->delimiter(',');
  sweep_cmd->add_option("--methods", o.methods, "subset of baseline,fedavg,fedsnr")
      ->delimiter(',')
      ->check(CLI::IsMember({"baseline", "fedavg", "fedsnr"}));
  auto* baseline = app.add_subcommand("baseline", "independently trained edge models");
  auto* check = app.add_subcommand("check", "gradient and aggregator self-tests");
  check->add_option("--gradient-seeds", o.check_seeds, "finite-difference seeds")
      ->check(CLI::PositiveNumber);
  auto* config = app.add_subcommand("config", "print the effective configuration");

  // Options may follow the subcommand name as well.
  for (auto* sub : {run, sweep_cmd, baseline, check, config}) sub->fallthrough();

  try {
    app.parse(argc, argv);
    if (const char* env = std::getenv("FEDSENSE_SEED"); env != nullptr && *env != '\0') {
      std::uint64_t v = 0;
      const std::string_view text(env);
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw CLI::ValidationError("FEDSENSE_SEED", "not an unsigned integer: " + std::string(text));
      }
      o.seed = v;
    }
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (sweep_cmd->parsed()) return cmd_sweep(o);
    if (baseline->parsed()) return cmd_baseline(o);
    if (check->parsed()) return cmd_check(o);
    if (config->parsed()) {
      const std::string text = serialize_config(effective_config(o));
      if (o.out_path.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        write_text(o.out_path, text);
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace fedsense::harness
