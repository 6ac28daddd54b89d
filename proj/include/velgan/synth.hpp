#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "velgan/manifest.hpp"
#include "velgan/rng.hpp"
#include "velgan/volume.hpp"

namespace velgan {

// Configuration of the synthetic layered-earth generator. Acts as the
// ground-truth oracle for the whole pipeline: the four volume roles it emits
// (seismic, v_avg, twt, v_int) share one geometry and are mutually consistent
// by construction.
struct GeoModelConfig {
  int n_inlines = 12;
  int n_crosslines = 256;
  int n_samples = 144;
  double dt = 0.004;        // [s]
  double dx = 12.5;         // [m]
  double dy = 12.5;         // [m]
  int n_layers = 9;         // water + (n_layers - 1) sediment layers
  double v_water = 1480.0;  // [m/s]
  double v_min = 1600.0;    // sediment velocity range [m/s]
  double v_max = 4300.0;
  double horizon_roughness = 1.0;  // 0 = perfectly flat boundaries
  double salt_probability = 0.3;
  double salt_velocity = 4500.0;  // [m/s]
  double wavelet_peak_hz = 25.0;
  double snr_db = 20.0;  // additive Gaussian noise level on the seismic
  uint64_t seed = 1;

  void validate() const;
};

// The four paired 2-D sections for one inline.
struct SectionSet {
  Section v_int;
  Section v_avg;
  Section twt;
  Section seismic;
};

// Velocities are hard-clamped to this ceiling regardless of config.
constexpr double kVelocityCeiling = 6500.0;

// Layered model with low-wavenumber horizon undulation, smooth lateral
// velocity variation and an optional ellipsoidal salt body. All randomness
// is derived from cfg.seed at construction, so sections for any inline are
// reproducible and adjacent inlines vary smoothly.
class GeoModel {
 public:
  explicit GeoModel(const GeoModelConfig& cfg);

  const GeoModelConfig& config() const { return cfg_; }

  // Base interval velocity per layer (index 0 = water), before lateral
  // variation. Strictly nondecreasing; sediments lie within [v_min, v_max].
  const std::vector<double>& layer_velocities() const { return layer_v_; }

  bool has_salt() const { return salt_present_; }

  // Interval-velocity section (crossline x time) at the given inline.
  Section velocity_section(int inline_idx) const;

  // All four roles for one inline, using the default processing chain.
  SectionSet section_set(int inline_idx) const;

 private:
  struct WaveTerm {
    double amp, f_il, f_xl, phase;
  };
  double wavy(const std::vector<WaveTerm>& terms, double il_n, double xl_n) const;

  GeoModelConfig cfg_;
  std::vector<double> layer_v_;                    // per-layer base velocity
  std::vector<double> boundary_base_;              // top of each layer [s]
  std::vector<std::vector<WaveTerm>> boundary_w_;  // undulation per boundary
  std::vector<WaveTerm> lateral_w_;                // lateral velocity field
  double lateral_amp_ = 0.0;
  bool salt_present_ = false;
  double salt_ci_ = 0, salt_cx_ = 0, salt_ct_ = 0;  // center (il, xl, t)
  double salt_ri_ = 1, salt_rx_ = 1, salt_rt_ = 1;  // semi-axes
};

// Convenience wrapper matching the one-shot use: deterministic in
// (cfg.seed, inline_idx).
Section generate_velocity_section(const GeoModelConfig& cfg, int inline_idx);

// Per-trace prefix mean of interval velocity (time-average velocity down to
// each sample), then Gaussian smoothing along the trace axis with the given
// sigma in traces (0 disables). dt is part of the signature for symmetry with
// the other section operations; the prefix mean does not depend on it.
Section average_velocity(const Section& v_int, double dt,
                         double lateral_sigma_traces = 8.0);

// twt[trace, k] = k * dt for every trace.
Section twt_grid(int n_samples, double dt, int n_traces);

// Constant-density acoustic reflectivity: r[k] = (v[k+1]-v[k])/(v[k+1]+v[k]),
// last sample 0.
Section reflectivity(const Section& v_int);

// Ricker wavelet sampled at t = k*dt for k in [-half_len, half_len].
std::vector<double> ricker(double peak_hz, double dt, int half_len);

// Per-trace same-length convolution of reflectivity with the wavelet plus
// zero-mean Gaussian noise scaled to the requested SNR in dB. An infinite
// snr_db disables the noise. Deterministic given seed.
Section synthesize_seismic(const Section& refl, const std::vector<double>& wavelet,
                           double snr_db, uint64_t seed);

struct DatasetManifest {
  std::string dir;
  KeyValueFile kv;

  std::string volume_path(const std::string& role) const;  // role: seismic|v_avg|twt|v_int
};

// Writes the four SEG-Y volumes plus manifest.txt (config, seed, shapes and
// per-volume CRC-32 checksums over sample bytes) into out_dir.
DatasetManifest build_dataset(const GeoModelConfig& cfg, const std::string& out_dir);

// Loads a previously written manifest.
DatasetManifest load_dataset_manifest(const std::string& dir);

}  // namespace velgan
