#include "velgan/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "velgan/rng.hpp"

namespace velgan {

using nn::Tensor;

TrainState::TrainState(const nn::GeneratorSpec& g, const nn::DiscriminatorSpec& d,
                       const nn::LossConfig& loss, const nn::OptimConfig& optim,
                       uint64_t seed_)
    : gspec(g), dspec(d), loss_cfg(loss), optim_cfg(optim), seed(seed_),
      G(g, Rng::mix(seed_, 0x6e6eu)), D(d, Rng::mix(seed_, 0xd15cu)),
      opt_g(optim), opt_d(optim) {
  loss.validate();
  optim.validate();
  if (d.in_channels != g.in_channels + g.out_channels)
    throw std::runtime_error(
        "train: discriminator must see generator input plus target channels");
  opt_g.attach(G.params());
  opt_d.attach(D.params());
}

namespace {

float to_net(float v01) { return 2.f * v01 - 1.f; }

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("train_step: non-finite ") + what);
}

}  // namespace

Tensor<float> patches_to_input(std::span<const PatchPair> batch) {
  if (batch.empty()) throw std::runtime_error("train: empty batch");
  const int ch = static_cast<int>(batch[0].input.size());
  const int h = batch[0].target.h, w = batch[0].target.w;
  Tensor<float> x(static_cast<int>(batch.size()), ch, h, w);
  for (size_t i = 0; i < batch.size(); ++i) {
    if (static_cast<int>(batch[i].input.size()) != ch)
      throw std::runtime_error("train: inconsistent channel count in batch");
    for (int c = 0; c < ch; ++c) {
      const Patch& p = batch[i].input[c];
      if (p.h != h || p.w != w)
        throw std::runtime_error("train: inconsistent patch shapes in batch");
      float* dst = x.plane(static_cast<int>(i), c);
      for (size_t q = 0; q < p.v.size(); ++q) dst[q] = to_net(p.v[q]);
    }
  }
  return x;
}

Tensor<float> patches_to_target(std::span<const PatchPair> batch) {
  if (batch.empty()) throw std::runtime_error("train: empty batch");
  const int h = batch[0].target.h, w = batch[0].target.w;
  Tensor<float> y(static_cast<int>(batch.size()), 1, h, w);
  for (size_t i = 0; i < batch.size(); ++i) {
    const Patch& p = batch[i].target;
    if (p.h != h || p.w != w)
      throw std::runtime_error("train: inconsistent patch shapes in batch");
    float* dst = y.plane(static_cast<int>(i), 0);
    for (size_t q = 0; q < p.v.size(); ++q) dst[q] = to_net(p.v[q]);
  }
  return y;
}

StepLosses train_step(TrainState& state, std::span<const PatchPair> batch) {
  Tensor<float> x = patches_to_input(batch);
  Tensor<float> y = patches_to_target(batch);

  const bool stochastic = state.gspec.noise_mode == nn::NoiseMode::dropout;
  Tensor<float> fake = state.G.forward(x, stochastic);

  // Discriminator update. Real and fake passes are backpropagated
  // separately, each against its own cached activations; the generator
  // output enters as data only (detached).
  state.D.zero_grads();
  Tensor<float> logits_real = state.D.forward(nn::concat_channels(x, y), true);
  const double inv_m = 1.0 / static_cast<double>(logits_real.size());
  Tensor<float> grad_map(logits_real.n, logits_real.c, logits_real.h, logits_real.w);
  for (size_t q = 0; q < logits_real.size(); ++q)
    grad_map.v[q] = static_cast<float>(
        (nn::sigmoid(static_cast<double>(logits_real.v[q])) - 1.0) * inv_m);
  state.D.backward(grad_map, true);

  Tensor<float> logits_fake = state.D.forward(nn::concat_channels(x, fake), true);
  for (size_t q = 0; q < logits_fake.size(); ++q)
    grad_map.v[q] = static_cast<float>(
        nn::sigmoid(static_cast<double>(logits_fake.v[q])) * inv_m);
  state.D.backward(grad_map, true);

  StepLosses out;
  out.d = nn::d_loss(logits_real, logits_fake);
  check_finite(out.d, "d_loss");
  auto d_params = state.D.params();
  state.opt_d.step(d_params);

  // Generator update against the freshly updated discriminator.
  state.G.zero_grads();
  Tensor<float> logits_g = state.D.forward(nn::concat_channels(x, fake), true);
  out.g_adv = nn::g_adv_loss(logits_g, state.loss_cfg.adversarial_form);
  out.g_l1 = nn::l1_loss(y, fake);
  out.g_total = out.g_adv + state.loss_cfg.lambda_l1 * out.g_l1;
  check_finite(out.g_adv, "g_adv");
  check_finite(out.g_l1, "g_l1");

  Tensor<float> gmap = nn::g_adv_loss_grad(logits_g, state.loss_cfg.adversarial_form);
  Tensor<float> gxy = state.D.backward(gmap, false);  // frozen discriminator
  auto [gx_cond, gfake] = nn::split_channels(gxy, x.c);
  Tensor<float> gl1 = nn::l1_loss_grad(y, fake);
  const float lambda = static_cast<float>(state.loss_cfg.lambda_l1);
  for (size_t q = 0; q < gfake.size(); ++q) gfake.v[q] += lambda * gl1.v[q];

  state.G.backward(gfake);
  auto g_params = state.G.params();
  state.opt_g.step(g_params);

  ++state.total_steps;
  return out;
}

std::vector<EpochLog> train(TrainState& state, const std::vector<PatchPair>& data,
                            const TrainOptions& opts) {
  if (data.empty()) throw std::runtime_error("train: empty dataset");
  const int bs = state.optim_cfg.batch_size;
  std::vector<EpochLog> logs;
  logs.reserve(static_cast<size_t>(opts.epochs));

  std::vector<size_t> order(data.size());
  std::vector<PatchPair> batch;

  for (int e = 0; e < opts.epochs; ++e) {
    const auto tic = std::chrono::steady_clock::now();
    const int epoch = state.epoch + 1;

    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(Rng::mix(state.seed, 0xe90cu + static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_below(i)]);

    StepLosses sum;
    int n_steps = 0;
    for (size_t at = 0; at < order.size(); at += bs) {
      batch.clear();
      for (size_t j = at; j < std::min(at + bs, order.size()); ++j)
        batch.push_back(data[order[j]]);
      const StepLosses s = train_step(state, batch);
      sum.d += s.d;
      sum.g_adv += s.g_adv;
      sum.g_l1 += s.g_l1;
      sum.g_total += s.g_total;
      ++n_steps;
    }

    state.epoch = epoch;
    EpochLog log;
    log.epoch = epoch;
    log.d_loss = sum.d / n_steps;
    log.g_adv = sum.g_adv / n_steps;
    log.g_l1 = sum.g_l1 / n_steps;
    log.g_total = sum.g_total / n_steps;
    state.loss_history.push_back({log.d_loss, log.g_adv, log.g_l1, log.g_total});
    if (opts.on_epoch) opts.on_epoch(state, log);
    log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    logs.push_back(log);
  }
  return logs;
}

}  // namespace velgan
