#pragma once

#include <cmath>
#include <stdexcept>

#include "velgan/nn/tensor.hpp"

namespace velgan::nn {

enum class AdversarialForm { non_saturating, minimax };

struct LossConfig {
  double lambda_l1 = 100.0;
  AdversarialForm adversarial_form = AdversarialForm::non_saturating;

  void validate() const {
    if (lambda_l1 < 0.0)
      throw std::runtime_error("loss: lambda_l1 must be >= 0");
  }
};

// log(1 + e^x), overflow-safe.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

// Patch-score binary cross-entropy, averaged over the map:
// mean[-log s(real) - log(1 - s(fake))]. All-zero logits give 2 ln 2.
template <typename T>
double d_loss(const Tensor<T>& logits_real, const Tensor<T>& logits_fake) {
  if (!logits_real.same_shape(logits_fake))
    throw std::runtime_error("d_loss: score map shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < logits_real.size(); ++i)
    acc += softplus(-static_cast<double>(logits_real.v[i])) +
           softplus(static_cast<double>(logits_fake.v[i]));
  return acc / static_cast<double>(logits_real.size());
}

template <typename T>
void d_loss_grad(const Tensor<T>& logits_real, const Tensor<T>& logits_fake,
                 Tensor<T>& grad_real, Tensor<T>& grad_fake) {
  if (!logits_real.same_shape(logits_fake))
    throw std::runtime_error("d_loss_grad: score map shape mismatch");
  grad_real = Tensor<T>(logits_real.n, logits_real.c, logits_real.h, logits_real.w);
  grad_fake = Tensor<T>(logits_real.n, logits_real.c, logits_real.h, logits_real.w);
  const double inv_m = 1.0 / static_cast<double>(logits_real.size());
  for (size_t i = 0; i < logits_real.size(); ++i) {
    grad_real.v[i] =
        static_cast<T>((sigmoid(static_cast<double>(logits_real.v[i])) - 1.0) * inv_m);
    grad_fake.v[i] =
        static_cast<T>(sigmoid(static_cast<double>(logits_fake.v[i])) * inv_m);
  }
}

// Non-saturating: mean[-log s(fake)]; minimax: mean[log(1 - s(fake))].
template <typename T>
double g_adv_loss(const Tensor<T>& logits_fake,
                  AdversarialForm form = AdversarialForm::non_saturating) {
  double acc = 0.0;
  for (size_t i = 0; i < logits_fake.size(); ++i) {
    const double f = static_cast<double>(logits_fake.v[i]);
    acc += form == AdversarialForm::non_saturating ? softplus(-f) : -softplus(f);
  }
  return acc / static_cast<double>(logits_fake.size());
}

template <typename T>
Tensor<T> g_adv_loss_grad(const Tensor<T>& logits_fake,
                          AdversarialForm form = AdversarialForm::non_saturating) {
  Tensor<T> g(logits_fake.n, logits_fake.c, logits_fake.h, logits_fake.w);
  const double inv_m = 1.0 / static_cast<double>(logits_fake.size());
  for (size_t i = 0; i < logits_fake.size(); ++i) {
    const double s = sigmoid(static_cast<double>(logits_fake.v[i]));
    g.v[i] = static_cast<T>((form == AdversarialForm::non_saturating ? s - 1.0 : -s) *
                            inv_m);
  }
  return g;
}

template <typename T>
double l1_loss(const Tensor<T>& y, const Tensor<T>& y_hat) {
  if (!y.same_shape(y_hat)) throw std::runtime_error("l1_loss: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < y.size(); ++i)
    acc += std::abs(static_cast<double>(y.v[i]) - static_cast<double>(y_hat.v[i]));
  return acc / static_cast<double>(y.size());
}

// Subgradient wrt y_hat: sign(y_hat - y) / N, 0 at ties.
template <typename T>
Tensor<T> l1_loss_grad(const Tensor<T>& y, const Tensor<T>& y_hat) {
  if (!y.same_shape(y_hat)) throw std::runtime_error("l1_loss_grad: shape mismatch");
  Tensor<T> g(y.n, y.c, y.h, y.w);
  const T inv_m = static_cast<T>(1.0 / static_cast<double>(y.size()));
  for (size_t i = 0; i < y.size(); ++i) {
    const T d = y_hat.v[i] - y.v[i];
    g.v[i] = d > T(0) ? inv_m : (d < T(0) ? -inv_m : T(0));
  }
  return g;
}

template <typename T>
double g_total_loss(const Tensor<T>& logits_fake, const Tensor<T>& y,
                    const Tensor<T>& y_hat, const LossConfig& cfg) {
  cfg.validate();
  return g_adv_loss(logits_fake, cfg.adversarial_form) +
         cfg.lambda_l1 * l1_loss(y, y_hat);
}

}  // namespace velgan::nn
