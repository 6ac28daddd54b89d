#include "velgan/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "velgan/rng.hpp"
#include "velgan/segy.hpp"

namespace velgan {

void NormStats::validate() const {
  if (!(x_max > x_min))
    throw std::runtime_error("normstats: degenerate range (x_max <= x_min)");
}

namespace {

void check_region(const Volume3D& v, const Region& r) {
  if (r.xl_begin < 0 || r.xl_end > v.n_crosslines || r.width() < 1)
    throw std::runtime_error("preprocess: empty or out-of-range region");
}

}  // namespace

ClipStats compute_clip_stats(const Volume3D& v, const Region& region) {
  check_region(v, region);
  double sum = 0.0;
  size_t n = 0;
  for (int il = 0; il < v.n_inlines; ++il)
    for (int xl = region.xl_begin; xl < region.xl_end; ++xl)
      for (int k = 0; k < v.n_samples; ++k, ++n) sum += v.at(il, xl, k);
  const double mu = sum / static_cast<double>(n);
  double ss = 0.0;
  for (int il = 0; il < v.n_inlines; ++il)
    for (int xl = region.xl_begin; xl < region.xl_end; ++xl)
      for (int k = 0; k < v.n_samples; ++k) {
        const double d = v.at(il, xl, k) - mu;
        ss += d * d;
      }
  return {mu, std::sqrt(ss / static_cast<double>(n))};
}

Volume3D clip_two_sigma(const Volume3D& v, const ClipStats& s) {
  Volume3D out = v;
  const double lo = s.mu - 2.0 * s.sigma;
  const double hi = s.mu + 2.0 * s.sigma;
  for (double& x : out.samples) x = std::clamp(x, lo, hi);
  return out;
}

Volume3D crop_water_column(const Volume3D& v, int top_index) {
  if (top_index < 0 || top_index >= v.n_samples)
    throw std::runtime_error("crop_water_column: top_index out of range");
  if (top_index == 0) return v;
  Volume3D out(v.n_inlines, v.n_crosslines, v.n_samples - top_index);
  out.dx = v.dx;
  out.dy = v.dy;
  out.dt = v.dt;
  out.t0 = v.t0 + top_index * v.dt;
  out.first_inline = v.first_inline;
  out.first_crossline = v.first_crossline;
  out.label = v.label;
  for (int il = 0; il < v.n_inlines; ++il)
    for (int xl = 0; xl < v.n_crosslines; ++xl)
      for (int k = top_index; k < v.n_samples; ++k)
        out.at(il, xl, k - top_index) = v.at(il, xl, k);
  return out;
}

NormStats compute_norm_stats(const Volume3D& v, const Region& region) {
  check_region(v, region);
  NormStats n;
  n.x_min = n.x_max = v.at(0, region.xl_begin, 0);
  for (int il = 0; il < v.n_inlines; ++il)
    for (int xl = region.xl_begin; xl < region.xl_end; ++xl)
      for (int k = 0; k < v.n_samples; ++k) {
        const double x = v.at(il, xl, k);
        n.x_min = std::min(n.x_min, x);
        n.x_max = std::max(n.x_max, x);
      }
  n.validate();
  return n;
}

Volume3D normalize(const Volume3D& v, const NormStats& n) {
  n.validate();
  Volume3D out = v;
  const double span = n.x_max - n.x_min;
  for (double& x : out.samples) x = std::clamp((x - n.x_min) / span, 0.0, 1.0);
  return out;
}

Volume3D denormalize(const Volume3D& v, const NormStats& n) {
  n.validate();
  Volume3D out = v;
  const double span = n.x_max - n.x_min;
  for (double& x : out.samples) x = n.x_min + x * span;
  return out;
}

int split_boundary(int n_crosslines, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::runtime_error("split: train_fraction must lie in (0,1)");
  const int boundary =
      static_cast<int>(std::llround(train_fraction * n_crosslines));
  if (boundary < 1 || boundary >= n_crosslines)
    throw std::runtime_error("split: a region would be empty at fraction " +
                             std::to_string(train_fraction));
  return boundary;
}

std::pair<Region, Region> split_train_test(
    const std::vector<const Volume3D*>& volumes, const SplitSpec& spec) {
  if (volumes.empty()) throw std::runtime_error("split: no volumes");
  const Volume3D& ref = *volumes.front();
  for (const Volume3D* v : volumes) {
    if (v->n_inlines != ref.n_inlines || v->n_crosslines != ref.n_crosslines ||
        v->n_samples != ref.n_samples)
      throw std::runtime_error("split: volume geometry mismatch");
  }
  const int b = split_boundary(ref.n_crosslines, spec.train_fraction);
  return {Region{0, b}, Region{b, ref.n_crosslines}};
}

std::vector<Patch> stack_channels(const Patch& seismic, const Patch& v_avg,
                                  const Patch& twt) {
  if (seismic.h != v_avg.h || seismic.w != v_avg.w || seismic.h != twt.h ||
      seismic.w != twt.w)
    throw std::runtime_error("stack_channels: shape mismatch");
  return {seismic, v_avg, twt};
}

namespace {

Patch extract_patch(const Volume3D& v, int il, int cx, int tz, int size) {
  Patch p(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      p.at(y, x) = static_cast<float>(v.at(il, cx + x, tz + y));
  return p;
}

}  // namespace

std::vector<PatchPair> sample_patches(const Volume3D& seismic, const Volume3D& v_avg,
                                      const Volume3D& twt, const Volume3D& v_int,
                                      const Region& region, int n, int size,
                                      uint64_t seed, int input_channels) {
  if (input_channels != 1 && input_channels != 3)
    throw std::runtime_error("sample_patches: input_channels must be 1 or 3");
  check_region(seismic, region);
  if (region.width() < size || seismic.n_samples < size)
    throw std::runtime_error("sample_patches: window of size " +
                             std::to_string(size) + " does not fit in region");

  Rng rng(seed);
  std::vector<PatchPair> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    PatchPair pp;
    pp.inline_idx = rng.uniform_int(0, seismic.n_inlines - 1);
    pp.crossline_off = rng.uniform_int(region.xl_begin, region.xl_end - size);
    pp.time_off = rng.uniform_int(0, seismic.n_samples - size);

    const Patch ps = extract_patch(seismic, pp.inline_idx, pp.crossline_off,
                                   pp.time_off, size);
    if (input_channels == 3) {
      pp.input = stack_channels(
          ps, extract_patch(v_avg, pp.inline_idx, pp.crossline_off, pp.time_off, size),
          extract_patch(twt, pp.inline_idx, pp.crossline_off, pp.time_off, size));
    } else {
      pp.input = {ps};
    }
    pp.target =
        extract_patch(v_int, pp.inline_idx, pp.crossline_off, pp.time_off, size);
    out.push_back(std::move(pp));
  }
  return out;
}

void FrozenStats::to_kv(KeyValueFile& kv) const {
  for (int i = 0; i < 4; ++i) {
    const std::string r = role_name(static_cast<Role>(i));
    kv.set_f64("clip." + r + ".mu", clip[i].mu);
    kv.set_f64("clip." + r + ".sigma", clip[i].sigma);
    kv.set_f64("norm." + r + ".min", norm[i].x_min);
    kv.set_f64("norm." + r + ".max", norm[i].x_max);
  }
  kv.set_i64("prep.crop_top", crop_top);
  kv.set_i64("prep.boundary_index", boundary_index);
  kv.set_f64("prep.train_fraction", train_fraction);
  kv.set_i64("prep.patch_size", patch_size);
  kv.set_i64("prep.input_channels", input_channels);
  kv.set("prep.patch_plane", "inline-section");  // crossline x time windows
}

FrozenStats FrozenStats::from_kv(const KeyValueFile& kv) {
  FrozenStats s;
  for (int i = 0; i < 4; ++i) {
    const std::string r = role_name(static_cast<Role>(i));
    s.clip[i].mu = kv.get_f64("clip." + r + ".mu");
    s.clip[i].sigma = kv.get_f64("clip." + r + ".sigma");
    s.norm[i].x_min = kv.get_f64("norm." + r + ".min");
    s.norm[i].x_max = kv.get_f64("norm." + r + ".max");
  }
  s.crop_top = static_cast<int>(kv.get_i64("prep.crop_top"));
  s.boundary_index = static_cast<int>(kv.get_i64("prep.boundary_index"));
  s.train_fraction = kv.get_f64("prep.train_fraction");
  s.patch_size = static_cast<int>(kv.get_i64("prep.patch_size"));
  s.input_channels = static_cast<int>(kv.get_i64("prep.input_channels"));
  return s;
}

PreparedDataset prepare_dataset(const DatasetManifest& manifest,
                                const PreprocessConfig& cfg) {
  PreparedDataset out;
  std::array<Volume3D, 4> raw;
  for (int i = 0; i < 4; ++i) {
    raw[i] = read_segy(manifest.volume_path(role_name(static_cast<Role>(i))));
    raw[i].label = role_name(static_cast<Role>(i));
  }

  SplitSpec spec{cfg.train_fraction};
  auto [train, test] = split_train_test(
      {&raw[0], &raw[1], &raw[2], &raw[3]}, spec);
  out.train_region = train;
  out.test_region = test;
  out.stats.boundary_index = train.xl_end;
  out.stats.train_fraction = cfg.train_fraction;
  out.stats.crop_top = cfg.crop_top;
  out.stats.patch_size = cfg.patch_size;
  out.stats.input_channels = cfg.input_channels;

  // Clip at two standard deviations, crop the water column, then normalize.
  // All statistics come from the training region only and are frozen for the
  // test region and for inference.
  for (int i = 0; i < 4; ++i) {
    out.stats.clip[i] = compute_clip_stats(raw[i], train);
    Volume3D v = clip_two_sigma(raw[i], out.stats.clip[i]);
    v = crop_water_column(v, cfg.crop_top);
    out.stats.norm[i] = compute_norm_stats(v, train);
    out.vol[i] = normalize(v, out.stats.norm[i]);
  }

  out.train_patches = sample_patches(
      out.vol[0], out.vol[1], out.vol[2], out.vol[3], train, cfg.n_train_patches,
      cfg.patch_size, cfg.seed, cfg.input_channels);
  out.test_patches = sample_patches(
      out.vol[0], out.vol[1], out.vol[2], out.vol[3], test, cfg.n_test_patches,
      cfg.patch_size, Rng::mix(cfg.seed, 0x7e57u), cfg.input_channels);
  return out;
}

}  // namespace velgan
