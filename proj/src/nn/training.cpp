#include "fedsense/training.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "fedsense/error.hpp"

namespace fedsense::nn {

namespace {

constexpr std::size_t kPredictChunk = 64;

void update_running(std::span<float> running, std::span<const float> batch,
                    float momentum) {
  for (std::size_t i = 0; i < running.size(); ++i) {
    running[i] = momentum * running[i] + (1.0f - momentum) * batch[i];
  }
}

void append_example(Batch<float>& batch, const dataset::Example& e) {
  if (batch.count == 0) {
    batch.length = e.length();
  } else if (e.length() != batch.length) {
    throw ShapeMismatch("examples in a batch must share the same length");
  }
  batch.x.insert(batch.x.end(), e.x.begin(), e.x.end());
  batch.labels.push_back(e.label);
  ++batch.count;
}

}  // namespace

Batch<float> make_batch(std::span<const dataset::Example> examples) {
  Batch<float> batch;
  if (!examples.empty()) {
    batch.x.reserve(examples.size() * examples.front().x.size());
  }
  for (const auto& e : examples) append_example(batch, e);
  return batch;
}

Batch<float> make_batch(std::span<const dataset::Example* const> examples) {
  Batch<float> batch;
  if (!examples.empty()) {
    batch.x.reserve(examples.size() * examples.front()->x.size());
  }
  for (const auto* e : examples) append_example(batch, *e);
  return batch;
}

std::pair<ModelWeights, TrainReport> train_local(
    const ModelWeights& w0, std::span<const dataset::Example> train,
    const TrainConfig& hp, Rng& rng) {
  if (train.empty()) throw EmptyDataset("train_local: no training examples");
  if (train.front().length() != w0.signal_length) {
    throw ShapeMismatch("training examples have length " +
                        std::to_string(train.front().length()) +
                        " but the model expects " +
                        std::to_string(w0.signal_length));
  }

  ModelWeights w = w0;
  TrainReport report;
  if (hp.max_epochs == 0) return {std::move(w), report};

  AdamState adam = AdamState::create(w, hp.adam);
  Engine<float> engine;
  const auto momentum = static_cast<float>(hp.bn_momentum);
  const std::size_t batch_size = std::max<std::size_t>(1, hp.batch_size);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const dataset::Example*> members;

  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      members.clear();
      for (std::size_t i = start; i < stop; ++i) members.push_back(&train[order[i]]);
      const auto batch = make_batch(members);

      auto bp = engine.backward(w, batch.x, batch.count, batch.labels, rng);
      adam_step(adam, w, bp.gradients);
      update_running(w[Param::Bn1MovingMean], bp.stats.mean1, momentum);
      update_running(w[Param::Bn1MovingVar], bp.stats.var1, momentum);
      update_running(w[Param::Bn2MovingMean], bp.stats.mean2, momentum);
      update_running(w[Param::Bn2MovingVar], bp.stats.var2, momentum);

      loss_sum += static_cast<double>(bp.loss) * static_cast<double>(batch.count);
      for (std::size_t i = 0; i < batch.count; ++i) {
        const std::uint8_t predicted = bp.probabilities[i] > 0.5f ? 1 : 0;
        if (predicted == batch.labels[i]) ++correct;
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(train.size());
    report.epochs_run = epoch + 1;
    report.final_loss = epoch_loss;
    report.train_accuracy =
        static_cast<double>(correct) / static_cast<double>(train.size());

    if (best - epoch_loss < hp.min_delta) {
      ++stale;
    } else {
      stale = 0;
    }
    best = std::min(best, epoch_loss);
    if (stale >= hp.patience && epoch + 1 < hp.max_epochs) {
      report.stopped_early = true;
      break;
    }
  }
  return {std::move(w), report};
}

std::pair<ModelWeights, TrainReport> train_local(const ModelWeights& w0,
                                                 const dataset::ClientDataset& ds,
                                                 const TrainConfig& hp,
                                                 Rng& rng) {
  return train_local(w0, std::span<const dataset::Example>(ds.train), hp, rng);
}

std::vector<float> predict(const ModelWeights& w,
                           std::span<const dataset::Example> examples) {
  Engine<float> engine;
  Rng unused(0);
  std::vector<float> out;
  out.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += kPredictChunk) {
    const auto chunk = examples.subspan(
        start, std::min(kPredictChunk, examples.size() - start));
    const auto batch = make_batch(chunk);
    const auto p = engine.forward(w, batch.x, batch.count, Mode::Infer, unused);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

double evaluate(const ModelWeights& w, std::span<const dataset::Example> examples) {
  if (examples.empty()) throw EmptyDataset("evaluate: no examples");
  const auto p = predict(w, examples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::uint8_t predicted = p[i] > 0.5f ? 1 : 0;
    if (predicted == examples[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace fedsense::nn
