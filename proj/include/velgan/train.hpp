#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "velgan/nn/adam.hpp"
#include "velgan/nn/discriminator.hpp"
#include "velgan/nn/generator.hpp"
#include "velgan/nn/losses.hpp"
#include "velgan/preprocess.hpp"

namespace velgan {

struct StepLosses {
  double d = 0.0;
  double g_adv = 0.0;
  double g_l1 = 0.0;
  double g_total = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double d_loss = 0.0;
  double g_adv = 0.0;
  double g_l1 = 0.0;
  double g_total = 0.0;
  double test_pe = std::numeric_limits<double>::quiet_NaN();
  double test_ssim = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;

  bool has_test_metrics() const { return test_pe == test_pe; }
};

// Everything a resumable training run owns: both networks, their Adam
// moments, the epoch counter, the run seed and the preprocessing statistics
// that inference must reuse.
struct TrainState {
  nn::GeneratorSpec gspec;
  nn::DiscriminatorSpec dspec;
  nn::LossConfig loss_cfg;
  nn::OptimConfig optim_cfg;
  uint64_t seed = 1;
  int epoch = 0;
  int64_t total_steps = 0;
  nn::UNetGenerator<float> G;
  nn::PatchDiscriminator<float> D;
  nn::AdamOptimizer<float> opt_g, opt_d;
  std::vector<std::array<double, 4>> loss_history;  // d, g_adv, g_l1, g_total
  FrozenStats stats;

  TrainState(const nn::GeneratorSpec& g, const nn::DiscriminatorSpec& d,
             const nn::LossConfig& loss, const nn::OptimConfig& optim,
             uint64_t seed_);
};

// Patches ([0,1]) to network tensors ([-1,1]) and back.
nn::Tensor<float> patches_to_input(std::span<const PatchPair> batch);
nn::Tensor<float> patches_to_target(std::span<const PatchPair> batch);

// One alternating update: discriminator on (x,y) and (x, G(x,z)) with the
// generator detached, then one generator update on adversarial + lambda*L1.
// Throws on a non-finite loss, naming the offending component.
StepLosses train_step(TrainState& state, std::span<const PatchPair> batch);

struct TrainOptions {
  int epochs = 1;
  // Invoked after each epoch; callers fill test metrics / write checkpoints.
  std::function<void(TrainState&, EpochLog&)> on_epoch;
};

// Seeded shuffled epochs over the dataset. Returns one log row per epoch.
std::vector<EpochLog> train(TrainState& state, const std::vector<PatchPair>& data,
                            const TrainOptions& opts);

}  // namespace velgan
