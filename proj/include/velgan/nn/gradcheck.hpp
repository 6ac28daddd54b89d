#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "velgan/nn/layers.hpp"
#include "velgan/nn/tensor.hpp"
#include "velgan/rng.hpp"

namespace velgan::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  size_t n_checked = 0;
  bool pass = false;
};

// Central finite-difference validation of a double-precision fragment. The
// scalar objective is sum(c * layer(x)) with fixed random coefficients c, so
// every output element constrains the Jacobian. Both parameter gradients and
// the input gradient are compared. The fragment must be deterministic
// (dropout and other stochastic layers are out of scope).
inline GradCheckReport grad_check(Layer<double>& layer, const Tensor<double>& input,
                                  double tolerance, uint64_t seed = 7,
                                  bool train_mode = true) {
  const double h = 1e-5;

  Tensor<double> x = input;
  Tensor<double> y0 = layer.forward(x, train_mode);
  {
    Tensor<double> y1 = layer.forward(x, train_mode);
    for (size_t i = 0; i < y0.size(); ++i)
      if (y0.v[i] != y1.v[i])
        throw std::runtime_error("grad_check: fragment is not deterministic");
  }

  Tensor<double> coeff(y0.n, y0.c, y0.h, y0.w);
  Rng rng(seed);
  for (double& c : coeff.v) c = rng.normal(0.0, 1.0);

  const auto objective = [&](const Tensor<double>& xin) {
    Tensor<double> y = layer.forward(xin, train_mode);
    double acc = 0.0;
    for (size_t i = 0; i < y.size(); ++i) acc += coeff.v[i] * y.v[i];
    return acc;
  };

  layer.zero_grads();
  layer.forward(x, train_mode);
  Tensor<double> gx = layer.backward(coeff, true);

  std::vector<ParamRef<double>> params;
  layer.collect_params("", params);

  GradCheckReport rep;
  const auto compare = [&](double analytic, double numeric) {
    const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-3);
    rep.max_rel_error =
        std::max(rep.max_rel_error, std::abs(analytic - numeric) / denom);
    ++rep.n_checked;
  };

  for (ParamRef<double>& p : params) {
    for (size_t i = 0; i < p.value->size(); ++i) {
      const double saved = p.value->v[i];
      p.value->v[i] = saved + h;
      const double j_plus = objective(x);
      p.value->v[i] = saved - h;
      const double j_minus = objective(x);
      p.value->v[i] = saved;
      compare(p.grad->v[i], (j_plus - j_minus) / (2.0 * h));
    }
  }
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = x.v[i];
    x.v[i] = saved + h;
    const double j_plus = objective(x);
    x.v[i] = saved - h;
    const double j_minus = objective(x);
    x.v[i] = saved;
    compare(gx.v[i], (j_plus - j_minus) / (2.0 * h));
  }

  rep.pass = rep.max_rel_error < tolerance;
  return rep;
}

}  // namespace velgan::nn
