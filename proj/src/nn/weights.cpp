#include <array>
#include <cmath>
#include <string>

#include "fedsense/error.hpp"
#include "fedsense/nn.hpp"

namespace fedsense::nn {

namespace {

constexpr std::array<ParamInfo, kParamCount> kParams = {{
    {"conv1.kernel", {kConv1Filters, kInputChannels, kKernel}, 3, true},
    {"conv1.bias", {kConv1Filters, 1, 1}, 1, true},
    {"bn1.gamma", {kConv1Filters, 1, 1}, 1, true},
    {"bn1.beta", {kConv1Filters, 1, 1}, 1, true},
    {"bn1.moving_mean", {kConv1Filters, 1, 1}, 1, false},
    {"bn1.moving_variance", {kConv1Filters, 1, 1}, 1, false},
    {"conv2.kernel", {kConv2Filters, kConv1Filters, kKernel}, 3, true},
    {"conv2.bias", {kConv2Filters, 1, 1}, 1, true},
    {"bn2.gamma", {kConv2Filters, 1, 1}, 1, true},
    {"bn2.beta", {kConv2Filters, 1, 1}, 1, true},
    {"bn2.moving_mean", {kConv2Filters, 1, 1}, 1, false},
    {"bn2.moving_variance", {kConv2Filters, 1, 1}, 1, false},
    {"dense.kernel", {kConv2Filters, kHidden, 1}, 2, true},
    {"dense.bias", {kHidden, 1, 1}, 1, true},
    {"output.kernel", {kHidden, 1, 1}, 2, true},
    {"output.bias", {1, 1, 1}, 1, true},
}};

void he_normal(std::span<float> values, std::size_t fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : values) v = static_cast<float>(rng.normal(0.0, std));
}

}  // namespace

const ParamInfo& param_info(Param p) noexcept {
  return kParams[static_cast<std::size_t>(p)];
}

const ParamInfo& param_info(std::size_t index) noexcept {
  return kParams[index];
}

template <typename T>
BasicWeights<T> BasicWeights<T>::zeros(std::size_t signal_length) {
  BasicWeights<T> w;
  w.signal_length = signal_length;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    w.tensors[i].assign(kParams[i].size(), T(0));
  }
  return w;
}

template <typename T>
std::size_t BasicWeights<T>::learnable_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (kParams[i].learnable) n += tensors[i].size();
  }
  return n;
}

template <typename T>
bool BasicWeights<T>::all_finite() const noexcept {
  for (const auto& t : tensors) {
    for (T v : t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template struct BasicWeights<float>;
template struct BasicWeights<double>;

ModelWeights init_model(std::size_t m, Rng& rng) {
  if (m < kMinSignalLength) {
    throw InvalidLength("init_model: signal length " + std::to_string(m) +
                        " is below " + std::to_string(kMinSignalLength));
  }
  auto w = ModelWeights::zeros(m);
  he_normal(w[Param::Conv1Kernel], kInputChannels * kKernel, rng);
  he_normal(w[Param::Conv2Kernel], kConv1Filters * kKernel, rng);
  he_normal(w[Param::DenseKernel], kConv2Filters, rng);
  he_normal(w[Param::OutputKernel], kHidden, rng);
  for (auto p : {Param::Bn1Gamma, Param::Bn1MovingVar, Param::Bn2Gamma,
                 Param::Bn2MovingVar}) {
    for (auto& v : w[p]) v = 1.0f;
  }
  return w;
}

AdamState AdamState::create(const ModelWeights& like, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  s.m = ModelWeights::zeros(like.signal_length);
  s.v = ModelWeights::zeros(like.signal_length);
  return s;
}

void adam_step(AdamState& state, ModelWeights& w, const ModelWeights& grads) {
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  const auto b1 = static_cast<float>(c.beta1);
  const auto b2 = static_cast<float>(c.beta2);
  const auto step_size = static_cast<float>(c.lr / correction1);
  const auto inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(correction2));
  const auto eps = static_cast<float>(c.eps);

  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (!kParams[i].learnable) continue;
    auto& wt = w.tensors[i];
    const auto& g = grads.tensors[i];
    auto& m = state.m.tensors[i];
    auto& v = state.v.tensors[i];
    if (g.size() != wt.size() || m.size() != wt.size()) {
      throw ShapeMismatch("adam_step: tensor " + std::string(kParams[i].name) +
                          " has mismatched shape");
    }
    for (std::size_t j = 0; j < wt.size(); ++j) {
      m[j] = b1 * m[j] + (1.0f - b1) * g[j];
      v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
      wt[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
  }
}

}  // namespace fedsense::nn
