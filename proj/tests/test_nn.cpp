#include <doctest.h>

#include <cmath>
#include <vector>

#include "velgan/nn/adam.hpp"
#include "velgan/nn/discriminator.hpp"
#include "velgan/nn/generator.hpp"
#include "velgan/nn/losses.hpp"
#include "velgan/rng.hpp"

using namespace velgan;
using nn::Tensor;

namespace {

// Stride-arithmetic oracle, independent of the conv implementation.
int conv_out(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

int disc_map_size(const nn::DiscriminatorSpec& spec, int input) {
  int sz = input;
  for (const auto& st : spec.stages()) sz = conv_out(sz, st.kernel, st.stride, st.pad);
  return sz;
}

Tensor<float> random_tensor(int n, int c, int h, int w, uint64_t seed,
                            double sd = 1.0) {
  Tensor<float> t(n, c, h, w);
  Rng rng(seed);
  for (float& v : t.v) v = static_cast<float>(rng.normal(0.0, sd));
  return t;
}

}  // namespace

TEST_CASE("receptive field recursion matches the 70x70 plan") {
  nn::DiscriminatorSpec spec;
  CHECK(receptive_field(spec) == 70);

  // one 4x4 stride-2 layer alone sees 4 samples
  int r = 1, j = 1;
  r += 3 * j;
  j *= 2;
  CHECK(r == 4);
  // adding a stride-1 k=4 layer grows the field by (k-1)*j
  const int before = r;
  r += 3 * j;
  CHECK(r - before == 3 * j);

  // the documented intermediate sequence 4, 10, 22, 46, 70
  std::vector<int> seq;
  int rr = 1, jj = 1;
  for (const auto& st : spec.stages()) {
    rr += (st.kernel - 1) * jj;
    jj *= st.stride;
    seq.push_back(rr);
  }
  CHECK(seq == std::vector<int>{4, 10, 22, 46, 70});
}

TEST_CASE("discriminator map shapes follow the stride arithmetic oracle") {
  nn::DiscriminatorSpec spec;
  spec.in_channels = 4;
  nn::PatchDiscriminator<float> d(spec, 3);
  for (int input : {64, 70, 128, 256}) {
    const Tensor<float> x = random_tensor(1, 4, input, input, 17 + input, 0.5);
    const Tensor<float> y = d.forward(x, true);
    const int expect = disc_map_size(spec, input);
    CHECK(y.c == 1);
    CHECK(y.h == expect);
    CHECK(y.w == expect);
  }
  CHECK(disc_map_size(spec, 256) == 30);  // documented 256 -> 30x30
}

TEST_CASE("generator preserves spatial shape and the tanh range") {
  for (int patch : {32, 64, 128}) {
    nn::GeneratorSpec spec;
    spec.in_channels = 3;
    spec.patch_size = patch;
    spec.base_width = patch <= 64 ? 16 : 8;  // small widths keep this fast
    nn::UNetGenerator<float> g(spec, 5);
    const Tensor<float> x = random_tensor(1, 3, patch, patch, 23, 0.5);
    const Tensor<float> y = g.forward(x, false);
    CHECK(y.n == 1);
    CHECK(y.c == 1);
    CHECK(y.h == patch);
    CHECK(y.w == patch);
    for (float v : y.v) {
      CHECK(v >= -1.f);
      CHECK(v <= 1.f);
    }
  }
}

TEST_CASE("generator forward is deterministic without noise, stochastic with") {
  nn::GeneratorSpec spec;
  spec.in_channels = 1;
  spec.patch_size = 32;
  spec.base_width = 8;
  nn::UNetGenerator<float> g(spec, 9);
  const Tensor<float> x = random_tensor(1, 1, 32, 32, 31, 0.5);
  const Tensor<float> a = g.forward(x, false);
  const Tensor<float> b = g.forward(x, false);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a.v[i] == b.v[i]);

  const Tensor<float> c = g.forward(x, true);
  const Tensor<float> d = g.forward(x, true);
  bool differs = false;
  for (size_t i = 0; i < c.size(); ++i) differs |= c.v[i] != d.v[i];
  CHECK(differs);  // dropout acts as the noise source
}

TEST_CASE("generator spec validation") {
  nn::GeneratorSpec spec;
  spec.patch_size = 48;
  CHECK_THROWS(spec.validate());
  spec.patch_size = 64;
  CHECK(spec.depth() == 6);
  CHECK(spec.encoder_widths() == std::vector<int>{64, 128, 256, 512, 512, 512});
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("discriminator loss values at reference points") {
  SUBCASE("all-zero logits give 2 ln 2") {
    Tensor<double> r(1, 1, 2, 2), f(1, 1, 2, 2);
    CHECK(nn::d_loss(r, f) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("confident correct discriminator drives the loss to zero") {
    Tensor<double> r(1, 1, 2, 2), f(1, 1, 2, 2);
    for (double& v : r.v) v = 40.0;
    for (double& v : f.v) v = -40.0;
    CHECK(nn::d_loss(r, f) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("mean of elementwise terms on a 2x2 map") {
    Tensor<double> r(1, 1, 2, 2), f(1, 1, 2, 2);
    const double rv[4] = {0.3, -1.2, 2.0, 0.0};
    const double fv[4] = {-0.5, 0.8, 0.1, -2.0};
    double expect = 0.0;
    for (int i = 0; i < 4; ++i) {
      r.v[i] = rv[i];
      f.v[i] = fv[i];
      expect += -std::log(1.0 / (1.0 + std::exp(-rv[i]))) -
                std::log(1.0 - 1.0 / (1.0 + std::exp(-fv[i])));
    }
    expect /= 4.0;
    CHECK(nn::d_loss(r, f) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("shape mismatch") {
    Tensor<double> r(1, 1, 2, 2), f(1, 1, 2, 3);
    CHECK_THROWS(nn::d_loss(r, f));
  }
}

TEST_CASE("generator adversarial loss") {
  Tensor<double> f(1, 1, 2, 2);
  CHECK(nn::g_adv_loss(f) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (double& v : f.v) v = 40.0;
  CHECK(nn::g_adv_loss(f) == doctest::Approx(0.0).epsilon(1e-12));

  SUBCASE("monotone decreasing in each logit") {
    Tensor<double> a(1, 1, 1, 2), b(1, 1, 1, 2);
    a.v = {0.2, -0.4};
    b.v = {0.2, -0.1};
    CHECK(nn::g_adv_loss(b) < nn::g_adv_loss(a));
  }
  SUBCASE("minimax form decreases as the discriminator is fooled") {
    Tensor<double> lo(1, 1, 1, 1), hi(1, 1, 1, 1);
    lo.v = {-1.0};
    hi.v = {1.0};
    CHECK(nn::g_adv_loss(hi, nn::AdversarialForm::minimax) <
          nn::g_adv_loss(lo, nn::AdversarialForm::minimax));
  }
}

TEST_CASE("l1 loss") {
  Tensor<double> y(1, 1, 1, 2), yh(1, 1, 1, 2);
  y.v = {0.0, 1.0};
  yh.v = {1.0, 1.0};
  CHECK(nn::l1_loss(y, yh) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(nn::l1_loss(y, y) == 0.0);

  SUBCASE("homogeneity") {
    Tensor<double> ay = y, ayh = yh;
    for (double& v : ay.v) v *= -3.5;
    for (double& v : ayh.v) v *= -3.5;
    CHECK(nn::l1_loss(ay, ayh) ==
          doctest::Approx(3.5 * nn::l1_loss(y, yh)).epsilon(1e-12));
  }
  SUBCASE("grad is the sign pattern away from ties") {
    const Tensor<double> g = nn::l1_loss_grad(y, yh);
    CHECK(g.v[0] == doctest::Approx(0.5));   // yh > y: +1/N
    CHECK(g.v[1] == 0.0);                    // tie
  }
}

TEST_CASE("total generator objective composes linearly in lambda") {
  Tensor<double> f(1, 1, 2, 2);  // zero logits
  Tensor<double> y(1, 1, 2, 2), yh(1, 1, 2, 2);
  y.v = {0.1, 0.2, 0.3, 0.4};
  yh.v = {0.2, 0.2, 0.2, 0.2};

  nn::LossConfig cfg;
  cfg.lambda_l1 = 0.0;
  CHECK(nn::g_total_loss(f, y, yh, cfg) ==
        doctest::Approx(nn::g_adv_loss(f)).epsilon(1e-15));

  cfg.lambda_l1 = 100.0;
  CHECK(nn::g_total_loss(f, y, y, cfg) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const double l1 = nn::l1_loss(y, yh);
  for (double lam : {1.0, 10.0, 100.0}) {
    cfg.lambda_l1 = lam;
    CHECK(nn::g_total_loss(f, y, yh, cfg) ==
          doctest::Approx(nn::g_adv_loss(f) + lam * l1).epsilon(1e-12));
  }
}

namespace {

// Scalar reference Adam, deliberately written in longhand.
struct ScalarAdam {
  double m = 0, v = 0;
  double step(double p, double g, int t, const nn::OptimConfig& cfg) {
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mhat = m / (1 - std::pow(cfg.beta1, t));
    const double vhat = v / (1 - std::pow(cfg.beta2, t));
    return p - cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
};

}  // namespace

TEST_CASE("adam matches the scalar reference") {
  nn::OptimConfig cfg;  // paper constants: lr 2e-5, betas 0.5 / 0.999
  SUBCASE("zero gradient leaves parameters untouched") {
    Tensor<double> p(1, 1, 1, 3), g(1, 1, 1, 3), m(1, 1, 1, 3), v(1, 1, 1, 3);
    p.v = {1.0, -2.0, 3.0};
    m.v = {0.5, 0.5, 0.5};
    nn::adam_step(p, g, m, v, 1, cfg);
    CHECK(p.v[0] == 1.0);
    CHECK(p.v[1] == -2.0);
    CHECK(p.v[2] == 3.0);
    CHECK(m.v[0] == doctest::Approx(0.25));  // moments decay
  }
  SUBCASE("first bias-corrected step") {
    Tensor<double> p(1, 1, 1, 1), g(1, 1, 1, 1), m(1, 1, 1, 1), v(1, 1, 1, 1);
    g.v = {1.0};
    nn::adam_step(p, g, m, v, 1, cfg);
    CHECK(p.v[0] == doctest::Approx(-cfg.lr / (1.0 + cfg.epsilon)).epsilon(1e-14));
  }
  SUBCASE("100 random steps track the oracle to 1e-12") {
    Rng rng(13);
    Tensor<double> p(1, 1, 1, 1), g(1, 1, 1, 1), m(1, 1, 1, 1), v(1, 1, 1, 1);
    p.v = {0.3};
    ScalarAdam oracle;
    double op = 0.3;
    for (int t = 1; t <= 100; ++t) {
      const double grad = rng.normal(0.0, 2.0);
      g.v = {grad};
      nn::adam_step(p, g, m, v, t, cfg);
      op = oracle.step(op, grad, t, cfg);
      CHECK(std::abs(p.v[0] - op) < 1e-12);
    }
  }
  SUBCASE("validation") {
    Tensor<double> p(1, 1, 1, 1), g(1, 1, 1, 2), m(1, 1, 1, 1), v(1, 1, 1, 1);
    CHECK_THROWS(nn::adam_step(p, g, m, v, 1, cfg));
    Tensor<double> g1(1, 1, 1, 1);
    CHECK_THROWS(nn::adam_step(p, g1, m, v, 0, cfg));
    nn::OptimConfig bad;
    bad.lr = 0.0;
    CHECK_THROWS(bad.validate());
  }
}

TEST_CASE("channel concat and split are inverse") {
  const Tensor<float> a = random_tensor(2, 3, 4, 5, 41);
  const Tensor<float> b = random_tensor(2, 2, 4, 5, 43);
  const Tensor<float> ab = nn::concat_channels(a, b);
  CHECK(ab.c == 5);
  const auto [a2, b2] = nn::split_channels(ab, 3);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a2.v[i] == a.v[i]);
  for (size_t i = 0; i < b.size(); ++i) CHECK(b2.v[i] == b.v[i]);
  CHECK_THROWS(nn::concat_channels(a, random_tensor(2, 2, 3, 5, 44)));
}
