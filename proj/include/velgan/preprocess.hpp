#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "velgan/manifest.hpp"
#include "velgan/synth.hpp"
#include "velgan/volume.hpp"

namespace velgan {

// Volume roles, in channel-stack order; v_int is the target.
enum class Role { seismic = 0, v_avg = 1, twt = 2, v_int = 3 };
constexpr const char* role_name(Role r) {
  switch (r) {
    case Role::seismic: return "seismic";
    case Role::v_avg: return "v_avg";
    case Role::twt: return "twt";
    default: return "v_int";
  }
}

// Per-volume mean / population standard deviation over the training region.
struct ClipStats {
  double mu = 0.0;
  double sigma = 0.0;
};

// Global min/max per volume role; x_norm = (x - x_min)/(x_max - x_min).
struct NormStats {
  double x_min = 0.0;
  double x_max = 1.0;
  void validate() const;
};

// Contiguous crossline split; 0.70 of 3001 crosslines puts the boundary at
// 2101 (nearest-integer rounding; see split_boundary).
struct SplitSpec {
  double train_fraction = 0.70;
};

// Contiguous crossline range [xl_begin, xl_end).
struct Region {
  int xl_begin = 0;
  int xl_end = 0;
  int width() const { return xl_end - xl_begin; }
};

// Single-channel patch, values in [0,1]. Rows are time samples, columns are
// crossline positions: at(y, x) = volume(inline, crossline_off + x, time_off + y).
struct Patch {
  int h = 0;
  int w = 0;
  std::vector<float> v;

  Patch() = default;
  Patch(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.f) {}
  float& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  float at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

// One training/test sample: stacked input channels plus the v_int target,
// with provenance coordinates (0-based volume indices).
struct PatchPair {
  std::vector<Patch> input;  // [seismic, v_avg, twt] or [seismic]
  Patch target;
  int inline_idx = 0;
  int crossline_off = 0;
  int time_off = 0;
};

ClipStats compute_clip_stats(const Volume3D& v, const Region& region);
Volume3D clip_two_sigma(const Volume3D& v, const ClipStats& s);

// Removes time samples [0, top_index); t0 advances by top_index * dt so the
// remaining samples keep their absolute two-way time.
Volume3D crop_water_column(const Volume3D& v, int top_index);

NormStats compute_norm_stats(const Volume3D& v, const Region& region);

// Eq-style min/max normalization; out-of-range values (possible at inference
// time) clamp to [0,1] instead of erroring.
Volume3D normalize(const Volume3D& v, const NormStats& n);
Volume3D denormalize(const Volume3D& v, const NormStats& n);

// Nearest-integer boundary; both sides must be nonempty.
int split_boundary(int n_crosslines, double train_fraction);

// Validates that all volumes share one geometry, then splits crosslines into
// contiguous (train, test) regions.
std::pair<Region, Region> split_train_test(const std::vector<const Volume3D*>& volumes,
                                           const SplitSpec& spec);

// Fixed channel order [seismic, v_avg, twt]; shapes must match.
std::vector<Patch> stack_channels(const Patch& seismic, const Patch& v_avg,
                                  const Patch& twt);

// n patch pairs sampled uniformly inside the region of the prepared
// (normalized) volumes, deterministic given seed. Patches are windows in
// inline sections (crossline x time planes). input_channels selects the
// 3-channel stack or the seismic-only ablation input.
std::vector<PatchPair> sample_patches(const Volume3D& seismic, const Volume3D& v_avg,
                                      const Volume3D& twt, const Volume3D& v_int,
                                      const Region& region, int n, int size,
                                      uint64_t seed, int input_channels = 3);

// Everything the preparation pipeline produced that inference must reproduce
// bit-exactly; persisted in run manifests and checkpoints.
struct FrozenStats {
  std::array<ClipStats, 4> clip;
  std::array<NormStats, 4> norm;
  int crop_top = 0;
  int boundary_index = 0;
  double train_fraction = 0.70;
  int patch_size = 64;
  int input_channels = 3;

  void to_kv(KeyValueFile& kv) const;
  static FrozenStats from_kv(const KeyValueFile& kv);
};

struct PreprocessConfig {
  int crop_top = 16;
  double train_fraction = 0.70;
  int patch_size = 64;
  int n_train_patches = 400;
  int n_test_patches = 100;
  int input_channels = 3;
  uint64_t seed = 1;
};

struct PreparedDataset {
  std::array<Volume3D, 4> vol;  // clipped, cropped, normalized; indexed by Role
  FrozenStats stats;
  Region train_region, test_region;
  std::vector<PatchPair> train_patches, test_patches;
};

// Full pipeline on a dataset directory: load the four volumes, clip at two
// standard deviations (train-region statistics), crop the water column,
// normalize per role (train-region min/max), split, sample patches. Test
// patches use a seed derived from cfg.seed so the two origin streams are
// independent.
PreparedDataset prepare_dataset(const DatasetManifest& manifest,
                                const PreprocessConfig& cfg);

}  // namespace velgan
