#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedsense/config.hpp"
#include "fedsense/dataset.hpp"
#include "fedsense/nn.hpp"
#include "fedsense/random.hpp"

namespace fedsense::federated {

struct ClientUpdate {
  nn::ModelWeights weights;
  std::size_t sample_count = 0;  // n_i
  double snr_linear = 0.0;       // gamma_i
};

/// Elementwise sum_i c_i w_i / sum_i c_i over every tensor, running
/// statistics included. Equal coefficients take an exact unweighted-mean
/// path, so FedAvg and FedSNR agree bit-for-bit when their weights tie.
/// Throws EmptyUpdateSet or ShapeMismatch.
nn::ModelWeights weighted_average(std::span<const ClientUpdate> updates,
                                  std::span<const double> coefficients);

/// Sample-count weighting. Throws ValidationError if any n_i == 0.
nn::ModelWeights fed_avg(std::span<const ClientUpdate> updates);

/// Linear-SNR weighting. Throws NonPositiveSnr if any gamma_i <= 0.
nn::ModelWeights fed_snr(std::span<const ClientUpdate> updates);

nn::ModelWeights aggregate(Aggregator rule, std::span<const ClientUpdate> updates);

struct RoundResult {
  std::size_t round = 0;
  Aggregator aggregator = Aggregator::FedSnr;
  std::vector<double> accuracies;  // per UAV, on that UAV's held-out set
  double mean_accuracy = 0.0;
  std::vector<double> snr_db;      // per UAV, realized gamma_i in dB
  std::vector<nn::TrainReport> reports;

  friend bool operator==(const RoundResult&, const RoundResult&) = default;
};

// Named sub-streams of the master seed. Each (setting, UAV) pair gets its
// own data and training streams, so client order and N do not perturb
// unrelated draws.
struct Streams {
  Rng master;

  explicit Streams(std::uint64_t seed) : master(seed) {}

  Rng init() const { return master.derive("init"); }
  Rng setting(std::size_t k) const { return master.derive("setting", k); }
  Rng data(std::size_t k, std::size_t uav) const {
    return master.derive("data", k, uav);
  }
  Rng train(std::size_t k, std::size_t uav) const {
    return master.derive("train", k, uav);
  }
};

nn::ModelWeights initial_model(const SimulationConfig& cfg);

struct RoundOutcome {
  nn::ModelWeights global;
  RoundResult result;
};

/// One setting: scene, per-UAV datasets, local training from `global`,
/// aggregation, then evaluation of the new global model on every UAV's
/// held-out set. `global` is never modified.
RoundOutcome run_round(const nn::ModelWeights& global, std::size_t setting,
                       const SimulationConfig& cfg, const Streams& streams);

struct ExperimentResult {
  std::vector<RoundResult> rounds;
  nn::ModelWeights global;
};

/// cfg.settings sequential rounds, each warm-started from the previous
/// global model (unless cfg.fresh_init).
ExperimentResult run_experiment(const SimulationConfig& cfg);

struct BaselineResult {
  std::vector<double> accuracies;  // per UAV
  double mean_accuracy = 0.0;
  std::vector<nn::TrainReport> reports;
};

/// Each UAV index pools its own training and held-out windows across all
/// settings, trains alone from the common initial model, and is scored on
/// its pooled held-out windows.
BaselineResult baseline_independent(const SimulationConfig& cfg);

/// Mean of per-round mean accuracy over the final 20% of rounds (at least 1).
double headline_accuracy(std::span<const RoundResult> rounds);

}  // namespace fedsense::federated
