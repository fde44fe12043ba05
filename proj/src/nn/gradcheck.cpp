#include <algorithm>
#include <cmath>

#include "fedsense/training.hpp"

namespace fedsense::nn {

namespace {

constexpr double kMinStep = 1e-7;

struct Probe {
  double loss;
  std::uint64_t signature;
};

}  // namespace

double relative_error(double a, double b, double floor) noexcept {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

GradientCheckReport gradient_check(const GradientCheckConfig& cfg) {
  Rng root(cfg.seed);
  Rng init_stream = root.derive("init");
  auto w = init_model(cfg.signal_length, init_stream).cast<double>();

  // Move batch-norm affine parameters and biases off their initial values so
  // every gradient path is exercised.
  Rng perturb = root.derive("perturb");
  for (auto p : {Param::Conv1Bias, Param::Conv2Bias, Param::DenseBias,
                 Param::OutputBias, Param::Bn1Beta, Param::Bn2Beta}) {
    for (auto& v : w[p]) v = perturb.normal(0.0, 0.1);
  }
  for (auto p : {Param::Bn1Gamma, Param::Bn2Gamma}) {
    for (auto& v : w[p]) v = perturb.uniform(0.5, 1.5);
  }

  Rng data = root.derive("data");
  const std::size_t values = cfg.batch * kInputChannels * cfg.signal_length;
  std::vector<double> x(values);
  for (auto& v : x) v = data.normal(0.0, 1.0);
  std::vector<std::uint8_t> labels(cfg.batch);
  for (std::size_t i = 0; i < cfg.batch; ++i) labels[i] = i % 2;

  const std::uint64_t dropout_seed = root.derive("dropout").seed();
  Engine<double> engine;

  Rng base_rng(dropout_seed);
  const auto analytic = engine.backward(w, x, cfg.batch, labels, base_rng);
  const std::uint64_t base_signature = engine.activation_signature();

  auto probe = [&](const BasicWeights<double>& weights) {
    Rng r(dropout_seed);
    const auto p = engine.forward(weights, x, cfg.batch, Mode::Train, r);
    return Probe{bce_loss<double>(p, labels), engine.activation_signature()};
  };

  GradientCheckReport report;
  for (std::size_t t = 0; t < kParamCount; ++t) {
    if (!param_info(t).learnable) continue;
    const std::size_t size = w.tensors[t].size();
    for (std::size_t j = 0; j < size; ++j) {
      const double original = w.tensors[t][j];
      const double exact = analytic.gradients.tensors[t][j];
      auto central = [&](double h, bool& smooth) {
        w.tensors[t][j] = original + h;
        const Probe plus = probe(w);
        w.tensors[t][j] = original - h;
        const Probe minus = probe(w);
        w.tensors[t][j] = original;
        smooth = smooth && plus.signature == base_signature &&
                 minus.signature == base_signature;
        return (plus.loss - minus.loss) / (2.0 * h);
      };

      // Richardson step on smooth misses, smaller steps across kinks.
      double step = cfg.step;
      double err = 0.0;
      for (;;) {
        bool smooth = true;
        const double coarse = central(step, smooth);
        err = relative_error(exact, coarse);
        if (smooth && err > cfg.tolerance) {
          const double fine = central(step / 2.0, smooth);
          if (smooth) {
            err = std::min(err, relative_error(exact, (4.0 * fine - coarse) / 3.0));
          }
        }
        if ((smooth && err <= cfg.tolerance) || step / 10.0 < kMinStep) break;
        step /= 10.0;
        ++report.refined;
      }
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_tensor = param_info(t).name.data();
      }
      if (err > cfg.tolerance) ++report.failures;
    }
  }
  return report;
}

}  // namespace fedsense::nn
