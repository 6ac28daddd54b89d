#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "velgan/nn/adam.hpp"
#include "velgan/nn/discriminator.hpp"
#include "velgan/nn/generator.hpp"
#include "velgan/nn/losses.hpp"
#include "velgan/preprocess.hpp"
#include "velgan/synth.hpp"

namespace velgan {

// INI-style run configuration: [section] headers, flat key = value lines,
// '#' comments. Keys are addressed as "section.key"; --set overrides use the
// same dotted form.
class ConfigFile {
 public:
  static ConfigFile load(const std::string& path);
  static ConfigFile from_text(const std::string& text);

  void set(const std::string& dotted_key, const std::string& value);
  void apply_override(const std::string& key_eq_value);  // "section.key=value"

  bool has(const std::string& dotted_key) const;
  std::string get(const std::string& dotted_key) const;
  std::string get_or(const std::string& dotted_key, const std::string& fallback) const;
  double get_f64_or(const std::string& dotted_key, double fallback) const;
  int64_t get_i64_or(const std::string& dotted_key, int64_t fallback) const;

  void save(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // dotted key, value
  std::map<std::string, size_t> index_;
};

// Typed view of everything one experiment needs. Every run freezes a copy of
// this (as INI) into its run directory.
struct RunConfig {
  std::string dataset_dir = "runs/dataset";
  GeoModelConfig geo;        // cmd_synth parameters
  PreprocessConfig prep;     // crop, split, patch sampling

  int input_channels = 3;    // 3-channel main config, 1-channel ablation
  int base_width = 64;
  double dropout_rate = 0.5;
  nn::NoiseMode noise_mode = nn::NoiseMode::dropout;
  nn::LossConfig loss;
  nn::OptimConfig optim;

  int epochs = 40;
  uint64_t train_seed = 7;
  int checkpoint_every = 10;
  int evaluate_every = 5;
  std::string resume;        // checkpoint path to continue from

  std::string out_dir = "runs/exp";
  int eval_map_patches = 3;
  SsimConfig::Window ssim_window = SsimConfig::Window::gaussian;

  nn::GeneratorSpec generator_spec() const;
  nn::DiscriminatorSpec discriminator_spec() const;

  static RunConfig from_config(const ConfigFile& cf);
  void to_config(ConfigFile& cf) const;
};

}  // namespace velgan
