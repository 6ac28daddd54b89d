#pragma once

#include <cstdint>
#include <vector>

#include "velgan/nn/layers.hpp"

namespace velgan::nn {

// 70x70 PatchGAN plan: kernel 4 throughout;
// 64 (s2, no normalization) -> 128 (s2) -> 256 (s2) -> 512 (s1) -> 1 (s1).
struct DiscriminatorSpec {
  int in_channels = 4;  // generator input channels + 1 target channel
  int base_width = 64;
  double leaky_slope = 0.2;

  struct Stage {
    int out_ch;
    int kernel = 4;
    int stride;
    int pad = 1;
    bool norm;
    bool act;
  };

  std::vector<Stage> stages() const {
    return {
        {base_width, 4, 2, 1, false, true},
        {base_width * 2, 4, 2, 1, true, true},
        {base_width * 4, 4, 2, 1, true, true},
        {base_width * 8, 4, 1, 1, true, true},
        {1, 4, 1, 1, false, false},  // unnormalized patch scores
    };
  }

  void validate() const {
    if (in_channels < 1 || base_width < 1)
      throw std::runtime_error("discriminator: channel/width fields must be >= 1");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
      throw std::runtime_error("discriminator: leaky_slope must lie in (0,1)");
  }
};

// Analytic receptive field of one output score: r <- r + (k-1)*j, j <- j*s
// over the stages (4, 10, 22, 46, 70 for the standard plan).
inline int receptive_field(const DiscriminatorSpec& spec) {
  int r = 1, jump = 1;
  for (const auto& st : spec.stages()) {
    r += (st.kernel - 1) * jump;
    jump *= st.stride;
  }
  return r;
}

template <typename T>
class PatchDiscriminator {
 public:
  PatchDiscriminator(const DiscriminatorSpec& spec, uint64_t seed) : spec_(spec) {
    spec.validate();
    Rng rng(seed);
    int in_ch = spec.in_channels;
    int idx = 0;
    for (const auto& st : spec.stages()) {
      const std::string tag = "l" + std::to_string(idx++);
      auto& conv = seq_.template emplace<Conv2d<T>>(tag + ".conv", in_ch, st.out_ch,
                                                    st.kernel, st.stride, st.pad);
      conv.init_gaussian(rng, 0.02);
      if (st.norm) seq_.template emplace<BatchNorm2d<T>>(tag + ".bn", st.out_ch);
      if (st.act)
        seq_.template emplace<LeakyReLU<T>>(tag + ".lrelu", spec.leaky_slope);
      in_ch = st.out_ch;
    }
  }

  const DiscriminatorSpec& spec() const { return spec_; }

  // xy: conditioning input concatenated with the real or generated target.
  // Returns the logit score map.
  Tensor<T> forward(const Tensor<T>& xy, bool train) {
    if (xy.c != spec_.in_channels)
      throw std::runtime_error("discriminator: input has " + std::to_string(xy.c) +
                               " channels, spec expects " +
                               std::to_string(spec_.in_channels));
    return seq_.forward(xy, train);
  }

  // acc_param_grads=false propagates through frozen weights (generator step).
  Tensor<T> backward(const Tensor<T>& gy, bool acc_param_grads) {
    return seq_.backward(gy, acc_param_grads);
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    seq_.collect_params("", out);
    return out;
  }

  void zero_grads() { seq_.zero_grads(); }

 private:
  DiscriminatorSpec spec_;
  Sequential<T> seq_;
};

}  // namespace velgan::nn
