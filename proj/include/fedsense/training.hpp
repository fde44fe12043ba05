#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fedsense/dataset.hpp"
#include "fedsense/nn.hpp"
#include "fedsense/random.hpp"

namespace fedsense::nn {

/// Packs examples into a contiguous float batch. Throws ShapeMismatch when
/// example widths differ.
Batch<float> make_batch(std::span<const dataset::Example> examples);
Batch<float> make_batch(std::span<const dataset::Example* const> examples);

/// Mini-batch Adam on ds.train with per-epoch shuffling and early stopping
/// once the epoch loss has failed to beat the best loss by min_delta for
/// `patience` consecutive epochs. Batch-norm running statistics follow
/// running = momentum * running + (1 - momentum) * batch.
/// Throws EmptyDataset when ds.train is empty.
std::pair<ModelWeights, TrainReport> train_local(const ModelWeights& w0,
                                                 const dataset::ClientDataset& ds,
                                                 const TrainConfig& hp,
                                                 Rng& rng);

std::pair<ModelWeights, TrainReport> train_local(
    const ModelWeights& w0, std::span<const dataset::Example> train,
    const TrainConfig& hp, Rng& rng);

/// Inference-mode probabilities, processed in chunks.
std::vector<float> predict(const ModelWeights& w,
                           std::span<const dataset::Example> examples);

/// Fraction of examples whose thresholded output (p > 0.5) matches the label.
/// Throws EmptyDataset on an empty set.
double evaluate(const ModelWeights& w, std::span<const dataset::Example> examples);

struct GradientCheckConfig {
  std::uint64_t seed = 1;
  std::size_t signal_length = 32;
  std::size_t batch = 2;
  double step = 1e-3;
  double tolerance = 1e-4;
};

struct GradientCheckReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::size_t refined = 0;  // components re-evaluated with another step
  double max_relative_error = 0.0;
  const char* worst_tensor = "";

  bool passed() const noexcept { return failures == 0; }
};

/// Compares every learnable gradient component of a random double-precision
/// model with central finite differences of the loss. A component outside
/// tolerance is re-estimated with a Richardson step (h and h/2); when the
/// +-h probes land on different sides of a ReLU or max-pool kink, h shrinks
/// by 10x (down to 1e-7) and the estimate is repeated.
GradientCheckReport gradient_check(const GradientCheckConfig& cfg);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-8) noexcept;

}  // namespace fedsense::nn
