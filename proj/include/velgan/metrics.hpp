#pragma once

#include <functional>
#include <string>
#include <vector>

#include "velgan/nn/generator.hpp"
#include "velgan/preprocess.hpp"
#include "velgan/volume.hpp"

namespace velgan {

// SSIM constants: C1 = (k1*L)^2, C2 = (k2*L)^2, C3 = C2/2. L is the physical
// data range (velocity max - min). Windowed mode uses an 11x11 Gaussian,
// sigma 1.5, with symmetric boundary padding so maps keep the input shape.
struct SsimConfig {
  enum class Window { global, gaussian };

  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
  Window window = Window::gaussian;
  int window_size = 11;
  double window_sigma = 1.5;

  double c1() const { return (k1 * data_range) * (k1 * data_range); }
  double c2() const { return (k2 * data_range) * (k2 * data_range); }
  double c3() const { return c2() / 2.0; }

  void validate() const;
};

// Mean of |y - y'| / y * 100 over all samples; y must be strictly positive
// (physical velocities), anything else is an error rather than an epsilon.
double percent_error(const Section& y, const Section& y_hat);
Section percent_error_map(const Section& y, const Section& y_hat);

struct SsimComponents {
  double l, c, s;  // luminance, contrast, structure
};

// Whole-image statistics (population moments), one component triple.
SsimComponents ssim_components(const Section& y, const Section& y_hat,
                               const SsimConfig& cfg);

// Global mode: single evaluation over whole-image statistics. Gaussian mode:
// mean of the windowed map.
double ssim(const Section& y, const Section& y_hat, const SsimConfig& cfg);

// Per-pixel windowed SSIM (gaussian mode only; global mode is an error).
Section ssim_map(const Section& y, const Section& y_hat, const SsimConfig& cfg);

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<int64_t> counts;
  int64_t total() const;
};

// Counts over all samples of all sections; out-of-range values land in the
// edge bins so totals always match the sample count.
Histogram velocity_histogram(const std::vector<const Section*>& sections, int bins,
                             double lo, double hi);

struct MetricReport {
  double pe_mean = 0.0;
  double ssim_mean = 0.0;
  std::string ssim_mode;  // "gaussian" or "global"
  int n_patches = 0;
  std::vector<double> per_patch_pe;
  std::vector<double> per_patch_ssim;
  // Denormalized panels and maps for the first map_indices.size() patches.
  std::vector<int> map_indices;
  std::vector<Section> target_panels, pred_panels, pe_maps, ssim_maps;
  Histogram hist_true, hist_pred;
  NormStats norm_used;
};

// Inference hook: maps one patch pair to a normalized ([0,1]) prediction.
using InferFn = std::function<Patch(const PatchPair&)>;

// Metric aggregation against an arbitrary inference hook (tests inject
// oracle stubs here): metrics on denormalized velocities, unweighted means
// across patches.
MetricReport evaluate_with(const InferFn& infer, const std::vector<PatchPair>& patches,
                           const FrozenStats& stats, int n_map_patches = 3,
                           SsimConfig::Window window = SsimConfig::Window::gaussian,
                           int histogram_bins = 60);

// Deterministic generator inference (noise off) per patch.
MetricReport evaluate(nn::UNetGenerator<float>& generator,
                      const std::vector<PatchPair>& patches,
                      const FrozenStats& stats, int n_map_patches = 3,
                      SsimConfig::Window window = SsimConfig::Window::gaussian,
                      int histogram_bins = 60);

}  // namespace velgan
