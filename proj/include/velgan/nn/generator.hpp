#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "velgan/nn/layers.hpp"

namespace velgan::nn {

// How the pix2pix noise source z is realized: dropout active at both train
// and inference time, or disabled entirely for deterministic inference.
enum class NoiseMode { dropout, none };

struct GeneratorSpec {
  int in_channels = 3;  // 1 for the seismic-only ablation
  int out_channels = 1;
  int base_width = 64;
  int patch_size = 64;  // power of two; depth = log2(patch_size)
  double dropout_rate = 0.5;
  NoiseMode noise_mode = NoiseMode::dropout;

  int depth() const {
    int d = 0, p = patch_size;
    while (p > 1) {
      p >>= 1;
      ++d;
    }
    return d;
  }

  // 64, 128, 256, 512, 512, ... for base 64 (cap at 8x base).
  std::vector<int> encoder_widths() const {
    std::vector<int> w(depth());
    for (int i = 0; i < depth(); ++i)
      w[i] = std::min(base_width << i, base_width * 8);
    return w;
  }

  void validate() const {
    if (patch_size < 4 || (patch_size & (patch_size - 1)) != 0)
      throw std::runtime_error("generator: patch_size must be a power of two >= 4");
    if (in_channels < 1 || out_channels < 1 || base_width < 1)
      throw std::runtime_error("generator: channel/width fields must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw std::runtime_error("generator: dropout_rate must lie in [0,1)");
  }
};

// UNet: stride-2 4x4 encoder convolutions down to a 1x1 bottleneck, mirrored
// transposed-convolution decoder with skip concatenation, tanh output.
// Batch normalization everywhere except the first encoder block, the
// bottleneck and the output block; dropout on the three innermost decoder
// blocks. Weights start from N(0, 0.02).
template <typename T>
class UNetGenerator {
 public:
  UNetGenerator(const GeneratorSpec& spec, uint64_t seed) : spec_(spec) {
    spec.validate();
    widths_ = spec.encoder_widths();
    const int d = spec.depth();
    Rng rng(seed);

    enc_.resize(d);
    for (int i = 0; i < d; ++i) {
      const int in_ch = i == 0 ? spec.in_channels : widths_[i - 1];
      auto& conv = enc_[i].template emplace<Conv2d<T>>("conv", in_ch, widths_[i], 4, 2, 1);
      conv.init_gaussian(rng, 0.02);
      if (i != 0 && i != d - 1)
        enc_[i].template emplace<BatchNorm2d<T>>("bn", widths_[i]);
      enc_[i].template emplace<LeakyReLU<T>>("lrelu", 0.2);
    }

    dec_.resize(d);
    for (int j = 0; j < d; ++j) {
      const bool last = j == d - 1;
      const int in_ch = j == 0 ? widths_[d - 1] : 2 * widths_[d - 1 - j];
      const int out_ch = last ? spec.out_channels : widths_[d - 2 - j];
      auto& conv =
          dec_[j].template emplace<ConvTranspose2d<T>>("convt", in_ch, out_ch, 4, 2, 1);
      conv.init_gaussian(rng, 0.02);
      if (!last) {
        dec_[j].template emplace<BatchNorm2d<T>>("bn", out_ch);
        if (j < 3)
          dec_[j].template emplace<Dropout<T>>("dropout", spec.dropout_rate,
                                               Rng::mix(seed, 0xd0u + j));
        dec_[j].template emplace<LeakyReLU<T>>("relu", 0.0);
      } else {
        dec_[j].template emplace<Tanh<T>>("tanh");
      }
    }
  }

  const GeneratorSpec& spec() const { return spec_; }

  // stochastic=true applies dropout (the noise source z). Outputs lie in
  // [-1,1]. Caches activations for a following backward().
  Tensor<T> forward(const Tensor<T>& x, bool stochastic) {
    if (x.c != spec_.in_channels)
      throw std::runtime_error("generator: input has " + std::to_string(x.c) +
                               " channels, spec expects " +
                               std::to_string(spec_.in_channels));
    if (x.h != x.w || (x.h & (x.h - 1)) != 0)
      throw std::runtime_error("generator: patch must be square power-of-two, got " +
                               x.shape_str());
    const int d = spec_.depth();
    if (x.h < (1 << d))
      throw std::runtime_error("generator: input smaller than network depth allows");

    e_.assign(d, Tensor<T>());
    Tensor<T> a = x;
    for (int i = 0; i < d; ++i) {
      a = enc_[i].forward(a, stochastic);
      e_[i] = a;
    }
    Tensor<T> out = e_[d - 1];
    for (int j = 0; j < d; ++j) {
      if (j > 0) out = concat_channels(out, e_[d - 1 - j]);
      out = dec_[j].forward(out, stochastic);
    }
    return out;
  }

  // Accumulates parameter gradients; returns the gradient wrt the input.
  Tensor<T> backward(const Tensor<T>& gy) {
    const int d = spec_.depth();
    std::vector<Tensor<T>> ge(d);
    Tensor<T> g = gy;
    for (int j = d - 1; j >= 0; --j) {
      g = dec_[j].backward(g, true);
      if (j > 0) {
        auto [gd, gskip] = split_channels(g, widths_[d - 1 - j]);
        ge[d - 1 - j] = std::move(gskip);
        g = std::move(gd);
      }
    }
    ge[d - 1] = std::move(g);
    for (int i = d - 1; i >= 1; --i) {
      Tensor<T> gi = enc_[i].backward(ge[i], true);
      for (size_t q = 0; q < gi.size(); ++q) ge[i - 1].v[q] += gi.v[q];
    }
    return enc_[0].backward(ge[0], true);
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (size_t i = 0; i < enc_.size(); ++i)
      enc_[i].collect_params("enc" + std::to_string(i) + ".", out);
    for (size_t j = 0; j < dec_.size(); ++j)
      dec_[j].collect_params("dec" + std::to_string(j) + ".", out);
    return out;
  }

  void zero_grads() {
    for (auto& b : enc_) b.zero_grads();
    for (auto& b : dec_) b.zero_grads();
  }

 private:
  GeneratorSpec spec_;
  std::vector<int> widths_;
  std::vector<Sequential<T>> enc_, dec_;
  std::vector<Tensor<T>> e_;
};

}  // namespace velgan::nn
