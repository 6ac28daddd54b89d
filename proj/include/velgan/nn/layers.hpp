#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "velgan/nn/tensor.hpp"
#include "velgan/rng.hpp"

namespace velgan::nn {

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

// Caching layer interface: forward stores whatever backward needs, backward
// consumes the most recent forward. When acc_param_grads is false the pass
// only propagates the input gradient (used when driving the generator update
// through a frozen discriminator).
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;
  virtual Tensor<T> backward(const Tensor<T>& gy, bool acc_param_grads) = 0;
  virtual void collect_params(const std::string& prefix,
                              std::vector<ParamRef<T>>& out) {}
  virtual void zero_grads() {}
};

namespace detail {

template <typename T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Gather a (ch*k*k) x (ph*pw) patch matrix from one plane set. The position
// grid (ph, pw) relates to the plane (th, tw) by y = py*s + ky - p.
template <typename T>
void im2col_gather(const T* plane, int ch, int th, int tw, int k, int s, int p,
                   int ph, int pw, ColMat<T>& col) {
  col.resize(static_cast<Eigen::Index>(ch) * k * k,
             static_cast<Eigen::Index>(ph) * pw);
  const size_t plane_sz = static_cast<size_t>(th) * tw;
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      const Eigen::Index q = static_cast<Eigen::Index>(py) * pw + px;
      T* dst = col.data() + q * col.rows();
      for (int cj = 0; cj < ch; ++cj) {
        const T* src = plane + cj * plane_sz;
        for (int ky = 0; ky < k; ++ky) {
          const int y = py * s + ky - p;
          if (y < 0 || y >= th) {
            for (int kx = 0; kx < k; ++kx) *dst++ = T(0);
            continue;
          }
          for (int kx = 0; kx < k; ++kx) {
            const int x = px * s + kx - p;
            *dst++ = (x < 0 || x >= tw) ? T(0) : src[static_cast<size_t>(y) * tw + x];
          }
        }
      }
    }
  }
}

// Scatter-add the transpose operation of im2col_gather.
template <typename T>
void col2im_scatter_add(const ColMat<T>& col, T* plane, int ch, int th, int tw,
                        int k, int s, int p, int ph, int pw) {
  const size_t plane_sz = static_cast<size_t>(th) * tw;
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      const Eigen::Index q = static_cast<Eigen::Index>(py) * pw + px;
      const T* src = col.data() + q * col.rows();
      for (int cj = 0; cj < ch; ++cj) {
        T* dst = plane + cj * plane_sz;
        for (int ky = 0; ky < k; ++ky) {
          const int y = py * s + ky - p;
          if (y < 0 || y >= th) {
            src += k;
            continue;
          }
          for (int kx = 0; kx < k; ++kx) {
            const int x = px * s + kx - p;
            if (x >= 0 && x < tw) dst[static_cast<size_t>(y) * tw + x] += *src;
            ++src;
          }
        }
      }
    }
  }
}

}  // namespace detail

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), s_(stride), p_(pad),
        weight_(out_ch, in_ch, kernel, kernel), bias_(1, out_ch, 1, 1),
        wgrad_(out_ch, in_ch, kernel, kernel), bgrad_(1, out_ch, 1, 1) {}

  void init_gaussian(Rng& rng, double stddev) {
    for (T& x : weight_.v) x = static_cast<T>(rng.normal(0.0, stddev));
    bias_.zero();
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    if (x.c != in_ch_)
      throw std::runtime_error("conv: expected " + std::to_string(in_ch_) +
                               " input channels, got " + std::to_string(x.c));
    const int oh = (x.h + 2 * p_ - k_) / s_ + 1;
    const int ow = (x.w + 2 * p_ - k_) / s_ + 1;
    if (oh < 1 || ow < 1)
      throw std::runtime_error("conv: input " + x.shape_str() + " too small");
    x_ = x;
    Tensor<T> y(x.n, out_ch_, oh, ow);
    Eigen::Map<const detail::RowMat<T>> W(weight_.data(), out_ch_,
                                          static_cast<Eigen::Index>(in_ch_) * k_ * k_);
    for (int i = 0; i < x.n; ++i) {
      detail::im2col_gather(x.plane(i, 0), in_ch_, x.h, x.w, k_, s_, p_, oh, ow, col_);
      Eigen::Map<detail::RowMat<T>> Y(y.plane(i, 0), out_ch_,
                                      static_cast<Eigen::Index>(oh) * ow);
      Y.noalias() = W * col_;
      for (int oc = 0; oc < out_ch_; ++oc) Y.row(oc).array() += bias_.v[oc];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool acc_param_grads) override {
    const int oh = gy.h, ow = gy.w;
    gy.require_shape(x_.n, out_ch_, oh, ow, "conv backward");
    Tensor<T> gx(x_.n, in_ch_, x_.h, x_.w);
    Eigen::Map<const detail::RowMat<T>> W(weight_.data(), out_ch_,
                                          static_cast<Eigen::Index>(in_ch_) * k_ * k_);
    Eigen::Map<detail::RowMat<T>> dW(wgrad_.data(), out_ch_,
                                     static_cast<Eigen::Index>(in_ch_) * k_ * k_);
    for (int i = 0; i < x_.n; ++i) {
      Eigen::Map<const detail::RowMat<T>> Gy(gy.plane(i, 0), out_ch_,
                                             static_cast<Eigen::Index>(oh) * ow);
      if (acc_param_grads) {
        detail::im2col_gather(x_.plane(i, 0), in_ch_, x_.h, x_.w, k_, s_, p_, oh, ow,
                              col_);
        dW.noalias() += Gy * col_.transpose();
        for (int oc = 0; oc < out_ch_; ++oc) bgrad_.v[oc] += Gy.row(oc).sum();
      }
      colg_.noalias() = W.transpose() * Gy;
      detail::col2im_scatter_add(colg_, gx.plane(i, 0), in_ch_, x_.h, x_.w, k_, s_,
                                 p_, oh, ow);
    }
    return gx;
  }

  void collect_params(const std::string& prefix,
                      std::vector<ParamRef<T>>& out) override {
    out.push_back({prefix + "weight", &weight_, &wgrad_});
    out.push_back({prefix + "bias", &bias_, &bgrad_});
  }
  void zero_grads() override {
    wgrad_.zero();
    bgrad_.zero();
  }

 private:
  int in_ch_, out_ch_, k_, s_, p_;
  Tensor<T> weight_, bias_, wgrad_, bgrad_;
  Tensor<T> x_;
  detail::ColMat<T> col_, colg_;
};

template <typename T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), s_(stride), p_(pad),
        weight_(in_ch, out_ch, kernel, kernel), bias_(1, out_ch, 1, 1),
        wgrad_(in_ch, out_ch, kernel, kernel), bgrad_(1, out_ch, 1, 1) {}

  void init_gaussian(Rng& rng, double stddev) {
    for (T& x : weight_.v) x = static_cast<T>(rng.normal(0.0, stddev));
    bias_.zero();
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    if (x.c != in_ch_)
      throw std::runtime_error("convT: expected " + std::to_string(in_ch_) +
                               " input channels, got " + std::to_string(x.c));
    const int oh = (x.h - 1) * s_ - 2 * p_ + k_;
    const int ow = (x.w - 1) * s_ - 2 * p_ + k_;
    if (oh < 1 || ow < 1)
      throw std::runtime_error("convT: input " + x.shape_str() + " too small");
    x_ = x;
    Tensor<T> y(x.n, out_ch_, oh, ow);
    Eigen::Map<const detail::RowMat<T>> W(weight_.data(), in_ch_,
                                          static_cast<Eigen::Index>(out_ch_) * k_ * k_);
    for (int i = 0; i < x.n; ++i) {
      Eigen::Map<const detail::RowMat<T>> X(x.plane(i, 0), in_ch_,
                                            static_cast<Eigen::Index>(x.h) * x.w);
      colg_.noalias() = W.transpose() * X;
      detail::col2im_scatter_add(colg_, y.plane(i, 0), out_ch_, oh, ow, k_, s_, p_,
                                 x.h, x.w);
      for (int oc = 0; oc < out_ch_; ++oc) {
        T* pl = y.plane(i, oc);
        const T b = bias_.v[oc];
        for (size_t q = 0; q < static_cast<size_t>(oh) * ow; ++q) pl[q] += b;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool acc_param_grads) override {
    const int oh = (x_.h - 1) * s_ - 2 * p_ + k_;
    const int ow = (x_.w - 1) * s_ - 2 * p_ + k_;
    gy.require_shape(x_.n, out_ch_, oh, ow, "convT backward");
    Tensor<T> gx(x_.n, in_ch_, x_.h, x_.w);
    Eigen::Map<const detail::RowMat<T>> W(weight_.data(), in_ch_,
                                          static_cast<Eigen::Index>(out_ch_) * k_ * k_);
    Eigen::Map<detail::RowMat<T>> dW(wgrad_.data(), in_ch_,
                                     static_cast<Eigen::Index>(out_ch_) * k_ * k_);
    for (int i = 0; i < x_.n; ++i) {
      detail::im2col_gather(gy.plane(i, 0), out_ch_, oh, ow, k_, s_, p_, x_.h, x_.w,
                            col_);
      Eigen::Map<detail::RowMat<T>> Gx(gx.plane(i, 0), in_ch_,
                                       static_cast<Eigen::Index>(x_.h) * x_.w);
      Gx.noalias() = W * col_;
      if (acc_param_grads) {
        Eigen::Map<const detail::RowMat<T>> X(x_.plane(i, 0), in_ch_,
                                              static_cast<Eigen::Index>(x_.h) * x_.w);
        dW.noalias() += X * col_.transpose();
        for (int oc = 0; oc < out_ch_; ++oc) {
          const T* pl = gy.plane(i, oc);
          T acc = T(0);
          for (size_t q = 0; q < static_cast<size_t>(oh) * ow; ++q) acc += pl[q];
          bgrad_.v[oc] += acc;
        }
      }
    }
    return gx;
  }

  void collect_params(const std::string& prefix,
                      std::vector<ParamRef<T>>& out) override {
    out.push_back({prefix + "weight", &weight_, &wgrad_});
    out.push_back({prefix + "bias", &bias_, &bgrad_});
  }
  void zero_grads() override {
    wgrad_.zero();
    bgrad_.zero();
  }

 private:
  int in_ch_, out_ch_, k_, s_, p_;
  Tensor<T> weight_, bias_, wgrad_, bgrad_;
  Tensor<T> x_;
  detail::ColMat<T> col_, colg_;
};

// Batch statistics in every mode: with batch size 1 this behaves like
// instance normalization and inference stays deterministic without running
// averages. The pix2pix lineage runs its normalization the same way.
template <typename T>
class BatchNorm2d final : public Layer<T> {
 public:
  explicit BatchNorm2d(int channels, T eps = T(1e-5))
      : ch_(channels), eps_(eps), gamma_(1, channels, 1, 1), beta_(1, channels, 1, 1),
        ggrad_(1, channels, 1, 1), bgrad_(1, channels, 1, 1) {
    for (T& g : gamma_.v) g = T(1);
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    if (x.c != ch_) throw std::runtime_error("batchnorm: channel mismatch");
    xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
    inv_std_.assign(ch_, T(0));
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const size_t plane_sz = static_cast<size_t>(x.h) * x.w;
    const T m = static_cast<T>(x.n * plane_sz);
    for (int j = 0; j < ch_; ++j) {
      T mean = T(0);
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.plane(i, j);
        for (size_t q = 0; q < plane_sz; ++q) mean += p[q];
      }
      mean /= m;
      T var = T(0);
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.plane(i, j);
        for (size_t q = 0; q < plane_sz; ++q) {
          const T d = p[q] - mean;
          var += d * d;
        }
      }
      var /= m;
      const T is = T(1) / std::sqrt(var + eps_);
      inv_std_[j] = is;
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.plane(i, j);
        T* xh = xhat_.plane(i, j);
        T* py = y.plane(i, j);
        for (size_t q = 0; q < plane_sz; ++q) {
          xh[q] = (p[q] - mean) * is;
          py[q] = gamma_.v[j] * xh[q] + beta_.v[j];
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool acc_param_grads) override {
    gy.require_shape(xhat_.n, xhat_.c, xhat_.h, xhat_.w, "batchnorm backward");
    Tensor<T> gx(gy.n, gy.c, gy.h, gy.w);
    const size_t plane_sz = static_cast<size_t>(gy.h) * gy.w;
    const T m = static_cast<T>(gy.n * plane_sz);
    for (int j = 0; j < ch_; ++j) {
      T sum_dy = T(0), sum_dy_xhat = T(0);
      for (int i = 0; i < gy.n; ++i) {
        const T* dy = gy.plane(i, j);
        const T* xh = xhat_.plane(i, j);
        for (size_t q = 0; q < plane_sz; ++q) {
          sum_dy += dy[q];
          sum_dy_xhat += dy[q] * xh[q];
        }
      }
      if (acc_param_grads) {
        ggrad_.v[j] += sum_dy_xhat;
        bgrad_.v[j] += sum_dy;
      }
      const T g = gamma_.v[j];
      const T is = inv_std_[j];
      for (int i = 0; i < gy.n; ++i) {
        const T* dy = gy.plane(i, j);
        const T* xh = xhat_.plane(i, j);
        T* dx = gx.plane(i, j);
        for (size_t q = 0; q < plane_sz; ++q)
          dx[q] = g * is / m * (m * dy[q] - sum_dy - xh[q] * sum_dy_xhat);
      }
    }
    return gx;
  }

  void collect_params(const std::string& prefix,
                      std::vector<ParamRef<T>>& out) override {
    out.push_back({prefix + "gamma", &gamma_, &ggrad_});
    out.push_back({prefix + "beta", &beta_, &bgrad_});
  }
  void zero_grads() override {
    ggrad_.zero();
    bgrad_.zero();
  }

 private:
  int ch_;
  T eps_;
  Tensor<T> gamma_, beta_, ggrad_, bgrad_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

// slope 0 gives plain ReLU.
template <typename T>
class LeakyReLU final : public Layer<T> {
 public:
  explicit LeakyReLU(double slope) : slope_(static_cast<T>(slope)) {}

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    x_ = x;
    Tensor<T> y = x;
    for (T& v : y.v)
      if (v < T(0)) v *= slope_;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy, bool) override {
    gy.require_shape(x_.n, x_.c, x_.h, x_.w, "leakyrelu backward");
    Tensor<T> gx = gy;
    for (size_t q = 0; q < gx.size(); ++q)
      if (x_.v[q] < T(0)) gx.v[q] *= slope_;
    return gx;
  }

 private:
  T slope_;
  Tensor<T> x_;
};

template <typename T>
class Tanh final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool) override {
    y_ = x;
    for (T& v : y_.v) v = std::tanh(v);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy, bool) override {
    gy.require_shape(y_.n, y_.c, y_.h, y_.w, "tanh backward");
    Tensor<T> gx = gy;
    for (size_t q = 0; q < gx.size(); ++q) gx.v[q] *= T(1) - y_.v[q] * y_.v[q];
    return gx;
  }

 private:
  Tensor<T> y_;
};

// Inverted dropout; identity when the train flag is off. Owns a seeded RNG so
// mask sequences reproduce run-to-run for a fixed construction seed.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double rate, uint64_t seed) : rate_(rate), rng_(seed) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    if (!train || rate_ <= 0.0) {
      mask_.v.clear();
      return x;
    }
    mask_ = Tensor<T>(x.n, x.c, x.h, x.w);
    const T keep_inv = static_cast<T>(1.0 / (1.0 - rate_));
    Tensor<T> y = x;
    for (size_t q = 0; q < y.size(); ++q) {
      mask_.v[q] = rng_.uniform() < rate_ ? T(0) : keep_inv;
      y.v[q] *= mask_.v[q];
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy, bool) override {
    if (mask_.v.empty()) return gy;
    gy.require_shape(mask_.n, mask_.c, mask_.h, mask_.w, "dropout backward");
    Tensor<T> gx = gy;
    for (size_t q = 0; q < gx.size(); ++q) gx.v[q] *= mask_.v[q];
    return gx;
  }

 private:
  double rate_;
  Rng rng_;
  Tensor<T> mask_;
};

template <typename T>
class Sequential final : public Layer<T> {
 public:
  template <typename L, typename... Args>
  L& emplace(const std::string& name, Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    names_.push_back(name);
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> a = x;
    for (auto& l : layers_) a = l->forward(a, train);
    return a;
  }
  Tensor<T> backward(const Tensor<T>& gy, bool acc_param_grads) override {
    Tensor<T> g = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      g = (*it)->backward(g, acc_param_grads);
    return g;
  }
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef<T>>& out) override {
    for (size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect_params(prefix + names_[i] + ".", out);
  }
  void zero_grads() override {
    for (auto& l : layers_) l->zero_grads();
  }
  size_t size() const { return layers_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace velgan::nn
