#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsense/error.hpp"
#include "fedsense/nn.hpp"
#include "fedsense/random.hpp"

namespace fedsense::nn {

template <typename T>
void dropout_mask(std::span<T> mask, double rate, Rng& rng) {
  const double keep = 1.0 - rate;
  const T scale = static_cast<T>(1.0 / keep);
  // One draw from the stream keys a counter-based generator for the mask.
  const std::uint64_t key = rng.next();
  if (rate <= 0.0) {
    std::fill(mask.begin(), mask.end(), T(1));
    return;
  }
  // Four 16-bit uniforms per draw.
  const auto threshold = static_cast<std::uint32_t>(keep * 65536.0 + 0.5);
  T* m = mask.data();
  const std::size_t size = mask.size();
  for (std::size_t i = 0; i < size; i += 4) {
    const std::uint64_t r = splitmix64(key + i);
    const std::size_t n = std::min<std::size_t>(4, size - i);
    for (std::size_t k = 0; k < n; ++k) {
      m[i + k] = ((r >> (16 * k)) & 0xffff) < threshold ? scale : T(0);
    }
  }
}

template <typename T>
void global_average_pool(std::span<const T> map, std::size_t channels,
                         std::size_t count, std::size_t length, std::span<T> out) {
  if (map.size() != channels * count * length || out.size() != count * channels) {
    throw ShapeMismatch("global_average_pool: buffer sizes disagree");
  }
  const std::size_t narrow = count * length;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = map.data() + c * narrow;
    for (std::size_t b = 0; b < count; ++b) {
      double sum = 0.0;
      for (std::size_t t = 0; t < length; ++t) sum += src[b * length + t];
      out[b * channels + c] =
          length > 0 ? static_cast<T>(sum / static_cast<double>(length)) : T(0);
    }
  }
}

namespace {

// Sum of f(0..n-1) over 16 fixed lanes: vectorizes, and the rounding does
// not depend on buffer alignment.
template <typename T, typename F>
T lane_sum(std::size_t n, F f) {
  constexpr std::size_t kLanes = 16;
  T acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t k = 0; k < kLanes; ++k) acc[k] += f(i + k);
  }
  for (std::size_t k = 0; i + k < n; ++k) acc[k] += f(i + k);
  T total = 0;
  for (T v : acc) total += v;
  return total;
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ArrMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstArrMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

constexpr std::size_t kPadLeft = (kKernel - 1) / 2;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) noexcept {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

// Layout of a feature map: element (c, b, t) lives at
// c * channel_stride + b * example_stride + t.
struct Layout {
  std::size_t channel_stride;
  std::size_t example_stride;
};

// "Same" im2col: cols[(c*K + k)][b*L + t] = in(c, b, t + k - pad).
template <typename T>
void im2col(const T* in, Layout layout, std::size_t channels, std::size_t count,
            std::size_t length, T* cols) {
  const std::size_t width = count * length;
  const auto len = static_cast<long>(length);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < kKernel; ++k) {
      T* row = cols + (c * kKernel + k) * width;
      const long shift = static_cast<long>(k) - static_cast<long>(kPadLeft);
      const long lo = std::clamp(-shift, 0L, len);
      const long hi = std::clamp(len - shift, lo, len);
      for (std::size_t b = 0; b < count; ++b) {
        const T* src = in + c * layout.channel_stride + b * layout.example_stride;
        T* dst = row + b * length;
        std::fill(dst, dst + lo, T(0));
        std::copy(src + lo + shift, src + hi + shift, dst + lo);
        std::fill(dst + hi, dst + len, T(0));
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, Layout layout, std::size_t channels,
            std::size_t count, std::size_t length, T* out) {
  const std::size_t width = count * length;
  const auto len = static_cast<long>(length);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < kKernel; ++k) {
      const T* row = cols + (c * kKernel + k) * width;
      const long shift = static_cast<long>(k) - static_cast<long>(kPadLeft);
      const long lo = std::clamp(-shift, 0L, len);
      const long hi = std::clamp(len - shift, lo, len);
      for (std::size_t b = 0; b < count; ++b) {
        T* dst = out + c * layout.channel_stride + b * layout.example_stride;
        const T* src = row + b * length;
        for (long t = lo; t < hi; ++t) dst[t + shift] += src[t];
      }
    }
  }
}

// State for one conv -> ReLU -> BN -> maxpool -> dropout block.
template <typename T>
struct ConvBlock {
  std::size_t in_channels = 0;
  std::size_t filters = 0;
  std::size_t length = 0;  // conv output length (same padding)
  std::size_t pooled = 0;  // length / 2

  std::vector<T> cols;     // (in_channels*K) x (count*length)
  std::vector<T> act;      // ReLU output, filters x (count*length)
  std::vector<T> xhat;     // normalized activations
  std::vector<T> mean, var, invstd;
  std::vector<std::uint8_t> argmax;  // filters x (count*pooled)
  std::vector<T> mask;     // dropout multipliers
  std::vector<T> out;      // dropout output, filters x (count*pooled)

  void resize(std::size_t count) {
    const std::size_t wide = count * length;
    const std::size_t narrow = count * pooled;
    cols.resize(in_channels * kKernel * wide);
    act.resize(filters * wide);
    xhat.resize(filters * wide);
    mean.resize(filters);
    var.resize(filters);
    invstd.resize(filters);
    argmax.resize(filters * narrow);
    mask.resize(filters * narrow);
    out.resize(filters * narrow);
  }

  void forward(const T* in, Layout layout, std::size_t count,
               std::span<const T> kernel, std::span<const T> bias,
               std::span<const T> gamma, std::span<const T> beta,
               std::span<const T> moving_mean, std::span<const T> moving_var,
               Mode mode, double dropout, Rng& rng) {
    const std::size_t wide = count * length;
    const std::size_t narrow = count * pooled;
    const std::size_t depth = in_channels * kKernel;

    im2col(in, layout, in_channels, count, length, cols.data());
    MatMap<T> z(act.data(), filters, wide);
    z.noalias() = ConstMatMap<T>(kernel.data(), filters, depth) *
                  ConstMatMap<T>(cols.data(), depth, wide);

    for (std::size_t f = 0; f < filters; ++f) {
      ArrMap<T> a(act.data() + f * wide, wide);
      a = (a + bias[f]).max(T(0));

      if (mode == Mode::Train) {
        const T* pa = a.data();
        const T mu = lane_sum<T>(wide, [pa](std::size_t i) { return pa[i]; }) / T(wide);
        const T v = lane_sum<T>(wide, [pa, mu](std::size_t i) {
                      const T d = pa[i] - mu;
                      return d * d;
                    }) / T(wide);
        mean[f] = mu;
        var[f] = v;
        invstd[f] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(v) + kBatchNormEps));
      } else {
        mean[f] = moving_mean[f];
        invstd[f] = static_cast<T>(
            1.0 / std::sqrt(static_cast<double>(moving_var[f]) + kBatchNormEps));
      }
      ArrMap<T>(xhat.data() + f * wide, wide) = (a - mean[f]) * invstd[f];
    }

    // Pool the affine output; y = gamma * xhat + beta is monotone in xhat
    // only when gamma >= 0, so compare y itself.
    for (std::size_t f = 0; f < filters; ++f) {
      const T g = gamma[f];
      const T bt = beta[f];
      const T* xh = xhat.data() + f * wide;
      T* o = out.data() + f * narrow;
      std::uint8_t* am = argmax.data() + f * narrow;
      for (std::size_t b = 0; b < count; ++b) {
        const T* row = xh + b * length;
        for (std::size_t t = 0; t < pooled; ++t) {
          const T y0 = g * row[2 * t] + bt;
          const T y1 = g * row[2 * t + 1] + bt;
          const bool second = y1 > y0;
          am[b * pooled + t] = second ? 1 : 0;
          o[b * pooled + t] = second ? y1 : y0;
        }
      }
    }

    if (mode == Mode::Train) {
      dropout_mask<T>(mask, dropout, rng);
      for (std::size_t i = 0; i < narrow * filters; ++i) out[i] *= mask[i];
    }
  }

  // Returns d(loss)/d(input) laid out per `layout` when `din` is non-null.
  void backward(const T* dout, std::size_t count, std::span<const T> kernel,
                std::span<const T> gamma, std::span<T> dkernel,
                std::span<T> dbias, std::span<T> dgamma, std::span<T> dbeta,
                std::vector<T>& dcols, std::vector<T>& dwide, T* din,
                Layout layout) {
    const std::size_t wide = count * length;
    const std::size_t narrow = count * pooled;
    const std::size_t depth = in_channels * kKernel;

    // Dropout and pooling: scatter into the pre-pool map.
    dwide.resize(filters * wide);
    for (std::size_t f = 0; f < filters; ++f) {
      const T* d = dout + f * narrow;
      const T* m = mask.data() + f * narrow;
      const std::uint8_t* am = argmax.data() + f * narrow;
      T* dw = dwide.data() + f * wide;
      for (std::size_t b = 0; b < count; ++b) {
        T* row = dw + b * length;
        for (std::size_t t = 0; t < pooled; ++t) {
          const std::size_t j = b * pooled + t;
          const T v = d[j] * m[j];
          row[2 * t] = am[j] ? T(0) : v;
          row[2 * t + 1] = am[j] ? v : T(0);
        }
        std::fill(row + 2 * pooled, row + length, T(0));
      }
    }

    // Batch norm then ReLU, in place in dwide.
    const T n = static_cast<T>(wide);
    for (std::size_t f = 0; f < filters; ++f) {
      ArrMap<T> dy(dwide.data() + f * wide, wide);
      ConstArrMap<T> xh(xhat.data() + f * wide, wide);
      ConstArrMap<T> a(act.data() + f * wide, wide);
      const T* pdy = dy.data();
      const T* pxh = xh.data();
      const T sdy = lane_sum<T>(wide, [pdy](std::size_t i) { return pdy[i]; });
      const T sdx = lane_sum<T>(wide, [pdy, pxh](std::size_t i) { return pdy[i] * pxh[i]; });
      dgamma[f] = sdx;
      dbeta[f] = sdy;
      const T scale = gamma[f] * invstd[f] / n;
      dy = (a > T(0)).select(scale * (n * dy - sdy - xh * sdx), T(0));
      dbias[f] = lane_sum<T>(wide, [pdy](std::size_t i) { return pdy[i]; });
    }

    ConstMatMap<T> dz(dwide.data(), filters, wide);
    MatMap<T>(dkernel.data(), filters, depth).noalias() =
        dz * ConstMatMap<T>(cols.data(), depth, wide).transpose();

    if (din != nullptr) {
      dcols.resize(depth * wide);
      MatMap<T>(dcols.data(), depth, wide).noalias() =
          ConstMatMap<T>(kernel.data(), filters, depth).transpose() * dz;
      col2im(dcols.data(), layout, in_channels, count, length, din);
    }
  }
};

}  // namespace

template <typename T>
struct Engine<T>::Impl {
  std::size_t count = 0;
  std::size_t length = 0;
  ConvBlock<T> block1;
  ConvBlock<T> block2;

  std::vector<T> pooled_avg;  // count x 100
  std::vector<T> hidden;      // count x 20, ReLU output
  std::vector<T> hidden_mask;
  std::vector<T> hidden_out;  // after dropout
  std::vector<T> prob;

  std::vector<T> dcols, dwide, dmid;

  void configure(std::size_t m, std::size_t n) {
    if (m != length) {
      length = m;
      block1.in_channels = kInputChannels;
      block1.filters = kConv1Filters;
      block1.length = m;
      block1.pooled = m / 2;
      block2.in_channels = kConv1Filters;
      block2.filters = kConv2Filters;
      block2.length = m / 2;
      block2.pooled = m / 4;
      count = 0;
    }
    if (n != count) {
      count = n;
      block1.resize(n);
      block2.resize(n);
      pooled_avg.resize(n * kConv2Filters);
      hidden.resize(n * kHidden);
      hidden_mask.resize(n * kHidden);
      hidden_out.resize(n * kHidden);
      prob.resize(n);
    }
  }

  void run_forward(const BasicWeights<T>& w, std::span<const T> x,
                   std::size_t n, Mode mode, Rng& rng) {
    const std::size_t m = w.signal_length;
    if (m < kMinSignalLength) {
      throw ShapeMismatch("weights carry invalid signal length " +
                          std::to_string(m));
    }
    if (n == 0 || x.size() != n * kInputChannels * m) {
      throw ShapeMismatch("input holds " + std::to_string(x.size()) +
                          " values, expected " + std::to_string(n) + " x 2 x " +
                          std::to_string(m));
    }
    configure(m, n);

    block1.forward(x.data(), {m, kInputChannels * m}, n,
                   w[Param::Conv1Kernel], w[Param::Conv1Bias],
                   w[Param::Bn1Gamma], w[Param::Bn1Beta],
                   w[Param::Bn1MovingMean], w[Param::Bn1MovingVar], mode,
                   kConvDropout, rng);
    block2.forward(block1.out.data(), {n * block1.pooled, block1.pooled}, n,
                   w[Param::Conv2Kernel], w[Param::Conv2Bias],
                   w[Param::Bn2Gamma], w[Param::Bn2Beta],
                   w[Param::Bn2MovingMean], w[Param::Bn2MovingVar], mode,
                   kConvDropout, rng);

    global_average_pool<T>(block2.out, kConv2Filters, n, block2.pooled,
                           pooled_avg);

    MatMap<T> h(hidden.data(), n, kHidden);
    h.noalias() = ConstMatMap<T>(pooled_avg.data(), n, kConv2Filters) *
                  ConstMatMap<T>(w[Param::DenseKernel].data(), kConv2Filters,
                                 kHidden);
    const auto dense_bias = w[Param::DenseBias];
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t j = 0; j < kHidden; ++j) {
        T& v = hidden[b * kHidden + j];
        v = std::max(v + dense_bias[j], T(0));
      }
    }
    if (mode == Mode::Train) {
      dropout_mask<T>(hidden_mask, kDenseDropout, rng);
      for (std::size_t i = 0; i < hidden.size(); ++i) {
        hidden_out[i] = hidden[i] * hidden_mask[i];
      }
    } else {
      hidden_out = hidden;
    }

    const auto out_kernel = w[Param::OutputKernel];
    const T out_bias = w[Param::OutputBias][0];
    for (std::size_t b = 0; b < n; ++b) {
      T logit = out_bias;
      for (std::size_t j = 0; j < kHidden; ++j) {
        logit += hidden_out[b * kHidden + j] * out_kernel[j];
      }
      prob[b] = T(1) / (T(1) + std::exp(-logit));
    }
  }
};

template <typename T>
Engine<T>::Engine() : impl_(std::make_unique<Impl>()) {}
template <typename T>
Engine<T>::~Engine() = default;
template <typename T>
Engine<T>::Engine(Engine&&) noexcept = default;
template <typename T>
Engine<T>& Engine<T>::operator=(Engine&&) noexcept = default;

template <typename T>
std::vector<T> Engine<T>::forward(const BasicWeights<T>& w,
                                  std::span<const T> x, std::size_t count,
                                  Mode mode, Rng& rng) {
  impl_->run_forward(w, x, count, mode, rng);
  return impl_->prob;
}

template <typename T>
Backprop<T> Engine<T>::backward(const BasicWeights<T>& w, std::span<const T> x,
                                std::size_t count,
                                std::span<const std::uint8_t> labels,
                                Rng& rng) {
  if (labels.size() != count) {
    throw ShapeMismatch("label count does not match batch size");
  }
  Impl& s = *impl_;
  s.run_forward(w, x, count, Mode::Train, rng);

  Backprop<T> result;
  result.probabilities = s.prob;
  result.loss = bce_loss<T>(s.prob, labels);
  result.gradients = BasicWeights<T>::zeros(w.signal_length);
  auto& g = result.gradients;

  const T inv_n = T(1) / static_cast<T>(count);
  std::vector<T> dlogit(count);
  for (std::size_t b = 0; b < count; ++b) {
    const T p = s.prob[b];
    const bool clamped = p < T(kBceEps) || p > T(1 - kBceEps);
    dlogit[b] = clamped ? T(0) : (p - static_cast<T>(labels[b])) * inv_n;
  }

  // Output layer.
  auto dout_kernel = g[Param::OutputKernel];
  T dout_bias = 0;
  std::vector<T> dhidden(count * kHidden);
  const auto out_kernel = w[Param::OutputKernel];
  for (std::size_t b = 0; b < count; ++b) {
    dout_bias += dlogit[b];
    for (std::size_t j = 0; j < kHidden; ++j) {
      dout_kernel[j] += s.hidden_out[b * kHidden + j] * dlogit[b];
      const T d = dlogit[b] * out_kernel[j] * s.hidden_mask[b * kHidden + j];
      dhidden[b * kHidden + j] = s.hidden[b * kHidden + j] > T(0) ? d : T(0);
    }
  }
  g[Param::OutputBias][0] = dout_bias;

  // Dense layer.
  ConstMatMap<T> dh(dhidden.data(), count, kHidden);
  ConstMatMap<T> pooled(s.pooled_avg.data(), count, kConv2Filters);
  MatMap<T>(g[Param::DenseKernel].data(), kConv2Filters, kHidden).noalias() =
      pooled.transpose() * dh;
  auto ddense_bias = g[Param::DenseBias];
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t j = 0; j < kHidden; ++j) {
      ddense_bias[j] += dhidden[b * kHidden + j];
    }
  }
  RowMat<T> dpooled =
      dh * ConstMatMap<T>(w[Param::DenseKernel].data(), kConv2Filters, kHidden)
               .transpose();

  // Global average pool back to block 2's output map.
  const std::size_t l2 = s.block2.pooled;
  const std::size_t narrow2 = count * l2;
  std::vector<T> dblock2(kConv2Filters * narrow2);
  const T inv_l2 = l2 > 0 ? T(1) / static_cast<T>(l2) : T(0);
  for (std::size_t f = 0; f < kConv2Filters; ++f) {
    for (std::size_t b = 0; b < count; ++b) {
      const T d = dpooled(b, f) * inv_l2;
      std::fill_n(dblock2.data() + f * narrow2 + b * l2, l2, d);
    }
  }

  const std::size_t l1 = s.block1.pooled;
  s.dmid.assign(kConv1Filters * count * l1, T(0));
  s.block2.backward(dblock2.data(), count, w[Param::Conv2Kernel],
                    w[Param::Bn2Gamma], g[Param::Conv2Kernel],
                    g[Param::Conv2Bias], g[Param::Bn2Gamma], g[Param::Bn2Beta],
                    s.dcols, s.dwide, s.dmid.data(), {count * l1, l1});
  s.block1.backward(s.dmid.data(), count, w[Param::Conv1Kernel],
                    w[Param::Bn1Gamma], g[Param::Conv1Kernel],
                    g[Param::Conv1Bias], g[Param::Bn1Gamma], g[Param::Bn1Beta],
                    s.dcols, s.dwide, nullptr, {0, 0});

  result.stats.mean1 = s.block1.mean;
  result.stats.var1 = s.block1.var;
  result.stats.mean2 = s.block2.mean;
  result.stats.var2 = s.block2.var;
  return result;
}

template <typename T>
std::span<const T> Engine<T>::conv_output(std::size_t block) const {
  return block == 0 ? impl_->block1.act : impl_->block2.act;
}

template <typename T>
std::span<const T> Engine<T>::normalized(std::size_t block) const {
  return block == 0 ? impl_->block1.xhat : impl_->block2.xhat;
}

template <typename T>
std::span<const T> Engine<T>::block_output(std::size_t block) const {
  return block == 0 ? impl_->block1.out : impl_->block2.out;
}

template <typename T>
std::uint64_t Engine<T>::activation_signature() const {
  const Impl& s = *impl_;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* block : {&s.block1, &s.block2}) {
    std::uint64_t word = 0;
    std::size_t bits = 0;
    auto push = [&](bool bit) {
      word = (word << 1) | static_cast<std::uint64_t>(bit);
      if (++bits == 64) {
        h = mix(h, word);
        word = 0;
        bits = 0;
      }
    };
    for (T a : block->act) push(a > T(0));
    for (auto am : block->argmax) push(am != 0);
    h = mix(h, word);
  }
  for (T v : s.hidden) h = mix(h, v > T(0));
  return h;
}

template <typename T>
std::vector<T> forward(const BasicWeights<T>& w, std::span<const T> x,
                       std::size_t count, Mode mode, Rng& rng) {
  Engine<T> engine;
  return engine.forward(w, x, count, mode, rng);
}

template <typename T>
Backprop<T> backward(const BasicWeights<T>& w, std::span<const T> x,
                     std::size_t count, std::span<const std::uint8_t> labels,
                     Rng& rng) {
  Engine<T> engine;
  return engine.backward(w, x, count, labels, rng);
}

template <typename T>
T bce_loss(std::span<const T> p, std::span<const std::uint8_t> labels) {
  if (p.size() != labels.size() || p.empty()) {
    throw ShapeMismatch("bce_loss: probabilities and labels disagree");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(static_cast<double>(p[i]), kBceEps, 1.0 - kBceEps);
    total += labels[i] ? -std::log(q) : -std::log(1.0 - q);
  }
  return static_cast<T>(total / static_cast<double>(p.size()));
}

template class Engine<float>;
template class Engine<double>;
template std::vector<float> forward(const BasicWeights<float>&,
                                    std::span<const float>, std::size_t, Mode,
                                    Rng&);
template std::vector<double> forward(const BasicWeights<double>&,
                                     std::span<const double>, std::size_t,
                                     Mode, Rng&);
template Backprop<float> backward(const BasicWeights<float>&,
                                  std::span<const float>, std::size_t,
                                  std::span<const std::uint8_t>, Rng&);
template Backprop<double> backward(const BasicWeights<double>&,
                                   std::span<const double>, std::size_t,
                                   std::span<const std::uint8_t>, Rng&);
template void dropout_mask(std::span<float>, double, Rng&);
template void dropout_mask(std::span<double>, double, Rng&);
template void global_average_pool(std::span<const float>, std::size_t, std::size_t,
                                  std::size_t, std::span<float>);
template void global_average_pool(std::span<const double>, std::size_t, std::size_t,
                                  std::size_t, std::span<double>);
template float bce_loss(std::span<const float>, std::span<const std::uint8_t>);
template double bce_loss(std::span<const double>,
                         std::span<const std::uint8_t>);

}  // namespace fedsense::nn
