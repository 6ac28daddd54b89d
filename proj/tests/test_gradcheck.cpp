#include <doctest.h>

#include <cmath>

#include "velgan/nn/discriminator.hpp"
#include "velgan/nn/generator.hpp"
#include "velgan/nn/gradcheck.hpp"
#include "velgan/nn/losses.hpp"
#include "velgan/rng.hpp"

using namespace velgan;
using nn::Tensor;

namespace {

Tensor<double> smooth_input(int n, int c, int h, int w, uint64_t seed) {
  Tensor<double> t(n, c, h, w);
  Rng rng(seed);
  for (double& v : t.v) v = rng.normal(0.0, 1.0);
  return t;
}

// Inputs bounded away from activation kinks so central differences at
// h = 1e-5 never straddle them.
Tensor<double> kink_safe_input(int n, int c, int h, int w, uint64_t seed) {
  Tensor<double> t(n, c, h, w);
  Rng rng(seed);
  for (double& v : t.v) {
    const double mag = rng.uniform(0.2, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

}  // namespace

TEST_CASE("convolution gradients pass central finite differences") {
  nn::Conv2d<double> conv(1, 2, 4, 2, 1);
  Rng rng(3);
  conv.init_gaussian(rng, 0.3);
  const auto rep = grad_check(conv, smooth_input(1, 1, 8, 8, 11), 1e-6);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.pass);
}

TEST_CASE("convolution + tanh fragment passes at 1e-6") {
  nn::Sequential<double> frag;
  auto& conv = frag.emplace<nn::Conv2d<double>>("conv", 1, 2, 4, 2, 1);
  Rng rng(5);
  conv.init_gaussian(rng, 0.3);
  frag.emplace<nn::Tanh<double>>("tanh");
  const auto rep = grad_check(frag, smooth_input(1, 1, 8, 8, 13), 1e-6);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.pass);
  CHECK(rep.n_checked > 30);  // all conv parameters plus the input
}

TEST_CASE("transposed convolution gradients pass at 1e-6") {
  nn::ConvTranspose2d<double> convt(2, 1, 4, 2, 1);
  Rng rng(7);
  convt.init_gaussian(rng, 0.3);
  const auto rep = grad_check(convt, smooth_input(1, 2, 5, 5, 17), 1e-6);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.pass);
}

TEST_CASE("batch normalization in training mode passes at 1e-4") {
  nn::BatchNorm2d<double> bn(3);
  const auto rep = grad_check(bn, smooth_input(2, 3, 4, 4, 19), 1e-4);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.pass);
}

TEST_CASE("activation gradients pass away from kinks") {
  SUBCASE("leaky relu") {
    nn::LeakyReLU<double> act(0.2);
    const auto rep = grad_check(act, kink_safe_input(1, 2, 6, 6, 23), 1e-7);
    CAPTURE(rep.max_rel_error);
    CHECK(rep.pass);
  }
  SUBCASE("relu") {
    nn::LeakyReLU<double> act(0.0);
    const auto rep = grad_check(act, kink_safe_input(1, 2, 6, 6, 29), 1e-7);
    CAPTURE(rep.max_rel_error);
    CHECK(rep.pass);
  }
  SUBCASE("tanh") {
    nn::Tanh<double> act;
    const auto rep = grad_check(act, smooth_input(1, 2, 6, 6, 31), 1e-8);
    CAPTURE(rep.max_rel_error);
    CHECK(rep.pass);
  }
}

TEST_CASE("encoder-style block (conv + bn + leaky) passes at 1e-4") {
  nn::Sequential<double> block;
  auto& conv = block.emplace<nn::Conv2d<double>>("conv", 2, 3, 4, 2, 1);
  Rng rng(37);
  conv.init_gaussian(rng, 0.3);
  block.emplace<nn::BatchNorm2d<double>>("bn", 3);
  block.emplace<nn::LeakyReLU<double>>("lrelu", 0.2);
  const auto rep = grad_check(block, smooth_input(1, 2, 8, 8, 41), 1e-4);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.pass);
}

TEST_CASE("loss gradients match finite differences") {
  const double h = 1e-6;
  Rng rng(43);

  SUBCASE("d_loss wrt both logit maps") {
    Tensor<double> r(1, 1, 2, 2), f(1, 1, 2, 2);
    for (double& v : r.v) v = rng.normal(0.0, 1.5);
    for (double& v : f.v) v = rng.normal(0.0, 1.5);
    Tensor<double> gr, gf;
    nn::d_loss_grad(r, f, gr, gf);
    for (size_t i = 0; i < r.size(); ++i) {
      Tensor<double> rp = r, rm = r;
      rp.v[i] += h;
      rm.v[i] -= h;
      const double num = (nn::d_loss(rp, f) - nn::d_loss(rm, f)) / (2 * h);
      CHECK(gr.v[i] == doctest::Approx(num).epsilon(1e-6));
      Tensor<double> fp = f, fm = f;
      fp.v[i] += h;
      fm.v[i] -= h;
      const double numf = (nn::d_loss(r, fp) - nn::d_loss(r, fm)) / (2 * h);
      CHECK(gf.v[i] == doctest::Approx(numf).epsilon(1e-6));
    }
  }
  SUBCASE("g_adv_loss in both forms") {
    for (auto form :
         {nn::AdversarialForm::non_saturating, nn::AdversarialForm::minimax}) {
      Tensor<double> f(1, 1, 2, 3);
      for (double& v : f.v) v = rng.normal(0.0, 1.5);
      const Tensor<double> g = nn::g_adv_loss_grad(f, form);
      for (size_t i = 0; i < f.size(); ++i) {
        Tensor<double> fp = f, fm = f;
        fp.v[i] += h;
        fm.v[i] -= h;
        const double num =
            (nn::g_adv_loss(fp, form) - nn::g_adv_loss(fm, form)) / (2 * h);
        CHECK(g.v[i] == doctest::Approx(num).epsilon(1e-6));
      }
    }
  }
  SUBCASE("l1 gradient away from ties") {
    Tensor<double> y(1, 1, 2, 2), yh(1, 1, 2, 2);
    for (size_t i = 0; i < y.size(); ++i) {
      y.v[i] = rng.normal(0.0, 1.0);
      yh.v[i] = y.v[i] + (rng.uniform() < 0.5 ? -0.5 : 0.5);
    }
    const Tensor<double> g = nn::l1_loss_grad(y, yh);
    for (size_t i = 0; i < yh.size(); ++i) {
      Tensor<double> p = yh, m = yh;
      p.v[i] += h;
      m.v[i] -= h;
      const double num = (nn::l1_loss(y, p) - nn::l1_loss(y, m)) / (2 * h);
      CHECK(g.v[i] == doctest::Approx(num).epsilon(1e-6));
      CHECK(std::abs(g.v[i]) == doctest::Approx(0.25));  // sign / N
    }
  }
}

namespace {

// Layer adapters so whole networks can run through grad_check; these verify
// the skip-connection and frozen-pass wiring, not just single layers.
class GeneratorFragment final : public nn::Layer<double> {
 public:
  GeneratorFragment(const nn::GeneratorSpec& spec, uint64_t seed) : g_(spec, seed) {}
  Tensor<double> forward(const Tensor<double>& x, bool) override {
    return g_.forward(x, false);
  }
  Tensor<double> backward(const Tensor<double>& gy, bool) override {
    return g_.backward(gy);
  }
  void collect_params(const std::string& prefix,
                      std::vector<nn::ParamRef<double>>& out) override {
    for (auto& p : g_.params()) out.push_back({prefix + p.name, p.value, p.grad});
  }
  void zero_grads() override { g_.zero_grads(); }

 private:
  nn::UNetGenerator<double> g_;
};

}  // namespace

TEST_CASE("whole tiny UNet passes grad check through the skip connections") {
  nn::GeneratorSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 1;
  spec.base_width = 2;
  spec.patch_size = 8;
  spec.noise_mode = nn::NoiseMode::none;
  GeneratorFragment frag(spec, 51);
  const auto rep = grad_check(frag, smooth_input(1, 2, 8, 8, 53), 1e-4);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.pass);
}

TEST_CASE("grad_check rejects stochastic fragments") {
  nn::Dropout<double> drop(0.5, 7);
  CHECK_THROWS(grad_check(drop, smooth_input(1, 2, 6, 6, 59), 1e-4));
}
