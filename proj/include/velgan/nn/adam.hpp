#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "velgan/nn/layers.hpp"
#include "velgan/nn/tensor.hpp"

namespace velgan::nn {

struct OptimConfig {
  double lr = 2e-5;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 1;

  void validate() const {
    if (!(lr > 0.0)) throw std::runtime_error("optim: lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw std::runtime_error("optim: betas must lie in [0,1)");
    if (batch_size < 1) throw std::runtime_error("optim: batch_size must be >= 1");
  }
};

// One bias-corrected Adam update on a single parameter tensor; t counts
// steps starting at 1.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v,
               int64_t t, const OptimConfig& cfg) {
  if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v))
    throw std::runtime_error("adam: shape mismatch");
  if (t < 1) throw std::runtime_error("adam: step index must be >= 1");
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T bc1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const T bc2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.epsilon);
  for (size_t i = 0; i < param.size(); ++i) {
    const T g = grad.v[i];
    m.v[i] = b1 * m.v[i] + (T(1) - b1) * g;
    v.v[i] = b2 * v.v[i] + (T(1) - b2) * g * g;
    const T m_hat = m.v[i] / bc1;
    const T v_hat = v.v[i] / bc2;
    param.v[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

// Moment storage for a fixed parameter list (layer collection order).
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(const OptimConfig& cfg) : cfg_(cfg) { cfg.validate(); }

  void attach(const std::vector<ParamRef<T>>& params) {
    m_.clear();
    v_.clear();
    for (const ParamRef<T>& p : params) {
      m_.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
      v_.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
    }
  }

  void step(const std::vector<ParamRef<T>>& params) {
    if (params.size() != m_.size())
      throw std::runtime_error("adam: optimizer not attached to this parameter set");
    ++t_;
    for (size_t i = 0; i < params.size(); ++i)
      adam_step(*params[i].value, *params[i].grad, m_[i], v_[i], t_, cfg_);
  }

  const OptimConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  size_t n_params() const { return m_.size(); }
  Tensor<T>& moment_m(size_t i) { return m_[i]; }
  Tensor<T>& moment_v(size_t i) { return v_[i]; }

 private:
  OptimConfig cfg_;
  int64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace velgan::nn
