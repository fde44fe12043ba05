#pragma once

// Edge spectrum-sensing CNN with hand-written reverse-mode gradients.
//
//   2 x M  -> conv1(10, k=30, same) -> ReLU -> BN -> maxpool(2) -> dropout(0.3)
//          -> conv2(100, k=30, same) -> ReLU -> BN -> maxpool(2) -> dropout(0.3)
//          -> global average pool -> dense(20) -> ReLU -> dropout(0.5)
//          -> dense(1) -> sigmoid
//
// Everything is templated on the scalar type: training runs in float, the
// finite-difference gradient check runs the same code in double.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsense/random.hpp"

namespace fedsense::nn {

inline constexpr std::size_t kInputChannels = 2;
inline constexpr std::size_t kConv1Filters = 10;
inline constexpr std::size_t kConv2Filters = 100;
inline constexpr std::size_t kKernel = 30;
inline constexpr std::size_t kHidden = 20;
inline constexpr double kConvDropout = 0.3;
inline constexpr double kDenseDropout = 0.5;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBceEps = 1e-7;
inline constexpr std::size_t kMinSignalLength = 4;

enum class Param : std::size_t {
  Conv1Kernel,
  Conv1Bias,
  Bn1Gamma,
  Bn1Beta,
  Bn1MovingMean,
  Bn1MovingVar,
  Conv2Kernel,
  Conv2Bias,
  Bn2Gamma,
  Bn2Beta,
  Bn2MovingMean,
  Bn2MovingVar,
  DenseKernel,
  DenseBias,
  OutputKernel,
  OutputBias,
};
inline constexpr std::size_t kParamCount = 16;

struct ParamInfo {
  std::string_view name;
  std::array<std::size_t, 3> shape;
  std::size_t rank;
  bool learnable;

  std::size_t size() const noexcept {
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank; ++i) n *= shape[i];
    return n;
  }
};

const ParamInfo& param_info(Param p) noexcept;
const ParamInfo& param_info(std::size_t index) noexcept;

/// Complete parameter set: learnable tensors plus batch-norm running
/// statistics. Plain data; copyable between threads by value.
template <typename T>
struct BasicWeights {
  std::size_t signal_length = 0;
  std::array<std::vector<T>, kParamCount> tensors;

  static BasicWeights zeros(std::size_t signal_length);

  std::span<T> operator[](Param p) noexcept {
    return tensors[static_cast<std::size_t>(p)];
  }
  std::span<const T> operator[](Param p) const noexcept {
    return tensors[static_cast<std::size_t>(p)];
  }

  std::size_t learnable_count() const noexcept;
  bool all_finite() const noexcept;

  template <typename U>
  BasicWeights<U> cast() const {
    BasicWeights<U> out;
    out.signal_length = signal_length;
    for (std::size_t i = 0; i < kParamCount; ++i) {
      out.tensors[i].assign(tensors[i].begin(), tensors[i].end());
    }
    return out;
  }

  friend bool operator==(const BasicWeights&, const BasicWeights&) = default;
};

using ModelWeights = BasicWeights<float>;

enum class Mode { Train, Infer };

/// A batch of examples laid out [example][channel][time].
template <typename T>
struct Batch {
  std::size_t count = 0;
  std::size_t length = 0;
  std::vector<T> x;
  std::vector<std::uint8_t> labels;

  std::span<const T> example(std::size_t i) const {
    return std::span<const T>(x).subspan(i * kInputChannels * length,
                                         kInputChannels * length);
  }
};

// Per-channel batch statistics from a training-mode forward pass.
template <typename T>
struct BatchNormStats {
  std::vector<T> mean1, var1, mean2, var2;
};

template <typename T>
struct Backprop {
  T loss = 0;
  BasicWeights<T> gradients;
  BatchNormStats<T> stats;
  std::vector<T> probabilities;
};

/// Reusable scratch buffers for one model width. Not thread-safe; use one
/// engine per worker.
template <typename T>
class Engine {
 public:
  Engine();
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  /// Sigmoid outputs for `count` examples in `x`. Dropout masks are drawn
  /// from `rng` in Train mode only.
  std::vector<T> forward(const BasicWeights<T>& w, std::span<const T> x,
                         std::size_t count, Mode mode, Rng& rng);

  /// Training-mode forward pass followed by exact reverse-mode gradients of
  /// the mean binary cross-entropy. Consumes `rng` exactly like forward().
  Backprop<T> backward(const BasicWeights<T>& w, std::span<const T> x,
                       std::size_t count, std::span<const std::uint8_t> labels,
                       Rng& rng);

  /// Hash of the ReLU sign pattern and pooling winners of the last forward
  /// pass. Used to detect finite-difference steps that cross a kink.
  std::uint64_t activation_signature() const;

  // Feature maps of the last forward pass for conv block 0 or 1, laid out
  // [filter][example][time]: ReLU(conv) output, its batch-normalized value
  // before scale and shift, and the block output after pooling and dropout.
  std::span<const T> conv_output(std::size_t block) const;
  std::span<const T> normalized(std::size_t block) const;
  std::span<const T> block_output(std::size_t block) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// He-normal convolution and dense weights, zero biases, identity batch norm.
/// Throws InvalidLength when m < 4.
ModelWeights init_model(std::size_t m, Rng& rng);

template <typename T>
std::vector<T> forward(const BasicWeights<T>& w, std::span<const T> x,
                       std::size_t count, Mode mode, Rng& rng);

template <typename T>
Backprop<T> backward(const BasicWeights<T>& w, std::span<const T> x,
                     std::size_t count, std::span<const std::uint8_t> labels,
                     Rng& rng);

/// Inverted-dropout multipliers: 0 with probability `rate`, else 1/(1-rate).
template <typename T>
void dropout_mask(std::span<T> mask, double rate, Rng& rng);

/// out[b * channels + c] = mean over time of map[c][b][:].
template <typename T>
void global_average_pool(std::span<const T> map, std::size_t channels,
                         std::size_t count, std::size_t length, std::span<T> out);

/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
template <typename T>
T bce_loss(std::span<const T> p, std::span<const std::uint8_t> labels);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  ModelWeights m;
  ModelWeights v;

  static AdamState create(const ModelWeights& like, const AdamConfig& config);
};

/// One bias-corrected Adam update on the learnable tensors. Running
/// statistics are left untouched.
void adam_step(AdamState& state, ModelWeights& w, const ModelWeights& grads);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  double min_delta = 1e-4;
  double bn_momentum = 0.99;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  bool stopped_early = false;
  double train_accuracy = 0.0;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

}  // namespace fedsense::nn
