#include "fedsense/federated.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>

#include "fedsense/error.hpp"
#include "fedsense/training.hpp"

namespace fedsense::federated {

namespace {

void check_shapes(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw EmptyUpdateSet("no client updates to aggregate");
  const auto& ref = updates.front().weights;
  for (const auto& u : updates) {
    if (u.weights.signal_length != ref.signal_length) {
      throw ShapeMismatch("client models disagree on signal length");
    }
    for (std::size_t t = 0; t < nn::kParamCount; ++t) {
      if (u.weights.tensors[t].size() != ref.tensors[t].size()) {
        throw ShapeMismatch("client tensor " +
                            std::string(nn::param_info(t).name) +
                            " has a different shape");
      }
    }
  }
}

// Runs fn(i) for i in [0, n), on up to `workers` threads. Results must not
// depend on scheduling; every task owns its inputs.
template <typename Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn fn) {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> out;
  out.reserve(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  for (std::size_t start = 0; start < n; start += workers) {
    std::vector<std::future<Result>> pending;
    const std::size_t stop = std::min(n, start + workers);
    for (std::size_t i = start; i < stop; ++i) {
      pending.push_back(std::async(std::launch::async, fn, i));
    }
    for (auto& f : pending) out.push_back(f.get());
  }
  return out;
}

struct ClientOutcome {
  ClientUpdate update;
  nn::TrainReport report;
  std::vector<dataset::Example> test;
};

}  // namespace

nn::ModelWeights weighted_average(std::span<const ClientUpdate> updates,
                                  std::span<const double> coefficients) {
  check_shapes(updates);
  if (coefficients.size() != updates.size()) {
    throw ShapeMismatch("one coefficient per client update is required");
  }
  double total = 0.0;
  for (double c : coefficients) total += c;

  const bool uniform = std::all_of(coefficients.begin(), coefficients.end(),
                                   [&](double c) { return c == coefficients.front(); });
  std::vector<double> share(coefficients.size());
  for (std::size_t i = 0; i < share.size(); ++i) share[i] = coefficients[i] / total;

  const double n = static_cast<double>(updates.size());
  auto out = nn::ModelWeights::zeros(updates.front().weights.signal_length);
  for (std::size_t t = 0; t < nn::kParamCount; ++t) {
    auto& dst = out.tensors[t];
    for (std::size_t j = 0; j < dst.size(); ++j) {
      double acc = 0.0;
      float lo = updates.front().weights.tensors[t][j];
      float hi = lo;
      for (std::size_t i = 0; i < updates.size(); ++i) {
        const float v = updates[i].weights.tensors[t][j];
        acc += uniform ? static_cast<double>(v) : share[i] * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (uniform) acc /= n;
      // The mean of the clients stays inside their range.
      dst[j] = std::clamp(static_cast<float>(acc), lo, hi);
    }
  }
  return out;
}

nn::ModelWeights fed_avg(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw EmptyUpdateSet("fed_avg: no client updates");
  std::vector<double> n(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    if (updates[i].sample_count == 0) {
      throw ValidationError("fed_avg: client " + std::to_string(i) +
                            " reports zero samples");
    }
    n[i] = static_cast<double>(updates[i].sample_count);
  }
  return weighted_average(updates, n);
}

nn::ModelWeights fed_snr(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw EmptyUpdateSet("fed_snr: no client updates");
  std::vector<double> gamma(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const double g = updates[i].snr_linear;
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw NonPositiveSnr("fed_snr: client " + std::to_string(i) +
                           " has SNR " + std::to_string(g));
    }
    gamma[i] = g;
  }
  return weighted_average(updates, gamma);
}

nn::ModelWeights aggregate(Aggregator rule, std::span<const ClientUpdate> updates) {
  return rule == Aggregator::FedAvg ? fed_avg(updates) : fed_snr(updates);
}

nn::ModelWeights initial_model(const SimulationConfig& cfg) {
  Rng stream = Streams(cfg.seed).init();
  return nn::init_model(cfg.radio.m_samples, stream);
}

RoundOutcome run_round(const nn::ModelWeights& global, std::size_t setting,
                       const SimulationConfig& cfg, const Streams& streams) {
  const auto scene = dataset::make_scene(cfg, streams.setting(setting));
  const nn::ModelWeights start = cfg.fresh_init ? initial_model(cfg) : global;

  auto clients = parallel_map(cfg.num_uavs, cfg.workers, [&](std::size_t i) {
    auto ds = dataset::make_client_dataset(scene, i, cfg,
                                           streams.data(setting, i));
    Rng train_stream = streams.train(setting, i);
    auto [weights, report] = nn::train_local(start, ds, cfg.train, train_stream);
    return ClientOutcome{{std::move(weights), ds.sample_count, ds.snr_linear},
                         report,
                         std::move(ds.test)};
  });

  std::vector<ClientUpdate> updates;
  updates.reserve(clients.size());
  for (auto& c : clients) updates.push_back(std::move(c.update));
  RoundOutcome outcome{aggregate(cfg.aggregator, updates), {}};

  auto& r = outcome.result;
  r.round = setting;
  r.aggregator = cfg.aggregator;
  r.accuracies = parallel_map(clients.size(), cfg.workers, [&](std::size_t i) {
    return nn::evaluate(outcome.global, clients[i].test);
  });
  double sum = 0.0;
  for (double a : r.accuracies) sum += a;
  r.mean_accuracy = sum / static_cast<double>(r.accuracies.size());
  for (std::size_t i = 0; i < clients.size(); ++i) {
    r.snr_db.push_back(channel::linear_to_db(updates[i].snr_linear));
    r.reports.push_back(clients[i].report);
  }
  return outcome;
}

ExperimentResult run_experiment(const SimulationConfig& cfg) {
  cfg.validate();
  const Streams streams(cfg.seed);
  ExperimentResult result;
  result.global = initial_model(cfg);
  result.rounds.reserve(cfg.settings);
  for (std::size_t k = 0; k < cfg.settings; ++k) {
    auto outcome = run_round(result.global, k, cfg, streams);
    result.global = std::move(outcome.global);
    result.rounds.push_back(std::move(outcome.result));
  }
  return result;
}

BaselineResult baseline_independent(const SimulationConfig& cfg) {
  cfg.validate();
  const Streams streams(cfg.seed);
  const auto init = initial_model(cfg);

  std::vector<dataset::Scene> scenes;
  scenes.reserve(cfg.settings);
  for (std::size_t k = 0; k < cfg.settings; ++k) {
    scenes.push_back(dataset::make_scene(cfg, streams.setting(k)));
  }

  struct Outcome {
    double accuracy;
    nn::TrainReport report;
  };
  auto outcomes = parallel_map(cfg.num_uavs, cfg.workers, [&](std::size_t i) {
    std::vector<dataset::Example> train;
    std::vector<dataset::Example> test;
    for (std::size_t k = 0; k < cfg.settings; ++k) {
      auto ds = dataset::make_client_dataset(scenes[k], i, cfg, streams.data(k, i));
      std::move(ds.train.begin(), ds.train.end(), std::back_inserter(train));
      std::move(ds.test.begin(), ds.test.end(), std::back_inserter(test));
    }
    Rng train_stream = streams.train(0, i);
    auto [weights, report] = nn::train_local(init, train, cfg.train, train_stream);
    return Outcome{nn::evaluate(weights, test), report};
  });

  BaselineResult result;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    result.accuracies.push_back(o.accuracy);
    result.reports.push_back(o.report);
    sum += o.accuracy;
  }
  result.mean_accuracy = sum / static_cast<double>(outcomes.size());
  return result;
}

double headline_accuracy(std::span<const RoundResult> rounds) {
  if (rounds.empty()) return 0.0;
  const auto tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(rounds.size()))));
  double sum = 0.0;
  for (std::size_t i = rounds.size() - tail; i < rounds.size(); ++i) {
    sum += rounds[i].mean_accuracy;
  }
  return sum / static_cast<double>(tail);
}

}  // namespace fedsense::federated
