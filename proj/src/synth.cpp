#include "velgan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "velgan/segy.hpp"

namespace velgan {

void GeoModelConfig::validate() const {
  if (n_inlines < 1 || n_crosslines < 1 || n_samples < 1)
    throw std::runtime_error("geomodel: all dimensions must be >= 1");
  if (!(dt > 0.0) || !(dx > 0.0) || !(dy > 0.0))
    throw std::runtime_error("geomodel: dt, dx, dy must be > 0");
  if (n_layers < 2) throw std::runtime_error("geomodel: n_layers must be >= 2");
  if (!(v_water > 0.0)) throw std::runtime_error("geomodel: v_water must be > 0");
  if (v_min < v_water)
    throw std::runtime_error("geomodel: v_range min must be >= v_water");
  if (!(v_max > v_min))
    throw std::runtime_error("geomodel: v_range max must exceed min");
  if (salt_probability < 0.0 || salt_probability > 1.0)
    throw std::runtime_error("geomodel: salt_probability must be in [0,1]");
  if (!(salt_velocity > 0.0))
    throw std::runtime_error("geomodel: salt_velocity must be > 0");
  if (!(wavelet_peak_hz > 0.0))
    throw std::runtime_error("geomodel: wavelet_peak_hz must be > 0");
  if (!std::isfinite(snr_db))
    throw std::runtime_error("geomodel: snr_db must be finite");
}

double GeoModel::wavy(const std::vector<WaveTerm>& terms, double il_n,
                      double xl_n) const {
  double s = 0.0;
  for (const WaveTerm& t : terms)
    s += t.amp * std::sin(2.0 * M_PI * (t.f_il * il_n + t.f_xl * xl_n) + t.phase);
  return s;
}

GeoModel::GeoModel(const GeoModelConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  const int n_sed = cfg.n_layers - 1;
  const double total_t = cfg.n_samples * cfg.dt;

  // Base layer velocities: water on top, then one sediment velocity per band
  // of [v_min, v_max]. Bands are disjoint, so the table is increasing, and
  // values sit inside each band so lateral variation rarely saturates.
  layer_v_.resize(cfg.n_layers);
  layer_v_[0] = cfg.v_water;
  const double band = (cfg.v_max - cfg.v_min) / n_sed;
  for (int i = 0; i < n_sed; ++i)
    layer_v_[i + 1] = cfg.v_min + band * (i + rng.uniform(0.2, 0.8));

  // Boundary base times: water bottom plus thickness-weighted sediment tops.
  boundary_base_.resize(n_sed);
  boundary_base_[0] = total_t * rng.uniform(0.18, 0.30);
  if (n_sed > 1) {
    std::vector<double> w(n_sed - 1);
    double wsum = 0.0;
    for (double& x : w) {
      x = rng.uniform(0.6, 1.4);
      wsum += x;
    }
    const double fill = total_t * 0.92 - boundary_base_[0];
    double acc = boundary_base_[0];
    for (int j = 1; j < n_sed; ++j) {
      acc += fill * w[j - 1] / wsum;
      boundary_base_[j] = acc;
    }
  }

  // Low-wavenumber undulation per boundary; smooth in inline and crossline.
  boundary_w_.resize(n_sed);
  for (int j = 0; j < n_sed; ++j) {
    boundary_w_[j].resize(3);
    for (WaveTerm& t : boundary_w_[j]) {
      t.amp = cfg.horizon_roughness * total_t * 0.015 * rng.uniform(0.5, 1.0);
      t.f_xl = rng.uniform(0.5, 2.5);
      t.f_il = rng.uniform(0.25, 1.25);
      t.phase = rng.uniform(0.0, 2.0 * M_PI);
    }
  }

  // Lateral velocity modulation shared by all sediment layers of a trace, so
  // per-trace monotonicity in layer order is preserved exactly.
  lateral_w_.resize(3);
  double amp_sum = 0.0;
  for (WaveTerm& t : lateral_w_) {
    t.amp = rng.uniform(0.5, 1.0);
    amp_sum += t.amp;
    t.f_xl = rng.uniform(0.4, 1.6);
    t.f_il = rng.uniform(0.25, 1.0);
    t.phase = rng.uniform(0.0, 2.0 * M_PI);
  }
  for (WaveTerm& t : lateral_w_) t.amp /= amp_sum;  // |field| <= 1
  // Lateral variation follows the roughness knob so a roughness-0 model is
  // exactly constant per layer.
  lateral_amp_ = 0.08 * std::clamp(cfg.horizon_roughness, 0.0, 1.0);

  // Salt body parameters are always drawn so the stream layout does not
  // depend on the presence coin.
  const double coin = rng.uniform();
  salt_ci_ = cfg.n_inlines * rng.uniform(0.3, 0.7);
  salt_ri_ = cfg.n_inlines * rng.uniform(0.2, 0.45);
  salt_cx_ = cfg.n_crosslines * rng.uniform(0.25, 0.75);
  salt_rx_ = cfg.n_crosslines * rng.uniform(0.08, 0.18);
  salt_ct_ = total_t * rng.uniform(0.50, 0.72);
  salt_rt_ = total_t * rng.uniform(0.08, 0.16);
  salt_present_ = coin < cfg.salt_probability;
}

Section GeoModel::velocity_section(int inline_idx) const {
  if (inline_idx < 0 || inline_idx >= cfg_.n_inlines)
    throw std::out_of_range("geomodel: inline index out of range");

  const int n_sed = cfg_.n_layers - 1;
  const double total_t = cfg_.n_samples * cfg_.dt;
  const double il_n = (inline_idx + 0.5) / cfg_.n_inlines;

  Section s(cfg_.n_crosslines, cfg_.n_samples);
  std::vector<double> bounds(n_sed);

  const double salt_di = (inline_idx + 0.5 - salt_ci_) / salt_ri_;
  const bool salt_here = salt_present_ && std::abs(salt_di) < 1.0;

  for (int xl = 0; xl < cfg_.n_crosslines; ++xl) {
    const double xl_n = (xl + 0.5) / cfg_.n_crosslines;

    for (int j = 0; j < n_sed; ++j) {
      double b = boundary_base_[j] + wavy(boundary_w_[j], il_n, xl_n);
      if (j > 0) b = std::max(b, bounds[j - 1] + cfg_.dt);
      bounds[j] = std::clamp(b, 2.0 * cfg_.dt, total_t);
    }

    const double scale = 1.0 + lateral_amp_ * wavy(lateral_w_, il_n, xl_n);

    int layer = 0;
    for (int k = 0; k < cfg_.n_samples; ++k) {
      const double t = k * cfg_.dt;
      while (layer < n_sed && bounds[layer] <= t) ++layer;
      double v = layer_v_[layer];
      if (layer > 0) v = std::clamp(v * scale, cfg_.v_min, cfg_.v_max);

      if (salt_here && t >= bounds[0]) {
        const double dxl = (xl + 0.5 - salt_cx_) / salt_rx_;
        const double dt_ = (t - salt_ct_) / salt_rt_;
        if (salt_di * salt_di + dxl * dxl + dt_ * dt_ < 1.0) v = cfg_.salt_velocity;
      }

      s.at(xl, k) = std::clamp(v, cfg_.v_water, kVelocityCeiling);
    }
  }
  return s;
}

SectionSet GeoModel::section_set(int inline_idx) const {
  SectionSet out;
  out.v_int = velocity_section(inline_idx);
  out.v_avg = average_velocity(out.v_int, cfg_.dt);
  out.twt = twt_grid(cfg_.n_samples, cfg_.dt, cfg_.n_crosslines);
  const int half_len =
      std::max(1, static_cast<int>(std::ceil(1.25 / (cfg_.wavelet_peak_hz * cfg_.dt))));
  out.seismic = synthesize_seismic(
      reflectivity(out.v_int), ricker(cfg_.wavelet_peak_hz, cfg_.dt, half_len),
      cfg_.snr_db, Rng::mix(cfg_.seed, 0x5e15u + static_cast<uint64_t>(inline_idx)));
  return out;
}

Section generate_velocity_section(const GeoModelConfig& cfg, int inline_idx) {
  return GeoModel(cfg).velocity_section(inline_idx);
}

Section average_velocity(const Section& v_int, double /*dt*/,
                         double lateral_sigma_traces) {
  if (v_int.n_samples < 1 || v_int.n_traces < 1)
    throw std::runtime_error("average_velocity: empty trace");
  for (double v : v_int.v)
    if (!(v > 0.0)) throw std::runtime_error("average_velocity: v_int must be > 0");

  Section prefix(v_int.n_traces, v_int.n_samples);
  for (int tr = 0; tr < v_int.n_traces; ++tr) {
    double acc = 0.0;
    for (int k = 0; k < v_int.n_samples; ++k) {
      acc += v_int.at(tr, k);
      prefix.at(tr, k) = acc / (k + 1);
    }
  }
  if (lateral_sigma_traces <= 0.0) return prefix;

  // Gaussian smoothing across traces; kernel renormalized at the edges so
  // laterally constant models pass through unchanged.
  const double sigma = lateral_sigma_traces;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (int d = -radius; d <= radius; ++d)
    kernel[d + radius] = std::exp(-0.5 * (d / sigma) * (d / sigma));

  Section out(v_int.n_traces, v_int.n_samples);
  for (int tr = 0; tr < v_int.n_traces; ++tr) {
    const int lo = std::max(0, tr - radius);
    const int hi = std::min(v_int.n_traces - 1, tr + radius);
    double wsum = 0.0;
    for (int j = lo; j <= hi; ++j) wsum += kernel[j - tr + radius];
    for (int k = 0; k < v_int.n_samples; ++k) {
      double acc = 0.0;
      for (int j = lo; j <= hi; ++j)
        acc += kernel[j - tr + radius] * prefix.at(j, k);
      out.at(tr, k) = acc / wsum;
    }
  }
  return out;
}

Section twt_grid(int n_samples, double dt, int n_traces) {
  if (n_samples < 1) throw std::runtime_error("twt_grid: n_samples must be >= 1");
  Section s(n_traces, n_samples);
  for (int tr = 0; tr < n_traces; ++tr)
    for (int k = 0; k < n_samples; ++k) s.at(tr, k) = k * dt;
  return s;
}

Section reflectivity(const Section& v_int) {
  for (double v : v_int.v)
    if (!(v > 0.0)) throw std::runtime_error("reflectivity: v_int must be > 0");
  Section r(v_int.n_traces, v_int.n_samples);
  for (int tr = 0; tr < v_int.n_traces; ++tr) {
    for (int k = 0; k + 1 < v_int.n_samples; ++k) {
      const double a = v_int.at(tr, k), b = v_int.at(tr, k + 1);
      r.at(tr, k) = (b - a) / (b + a);
    }
    r.at(tr, v_int.n_samples - 1) = 0.0;
  }
  return r;
}

std::vector<double> ricker(double peak_hz, double dt, int half_len) {
  if (!(peak_hz > 0.0)) throw std::runtime_error("ricker: peak frequency must be > 0");
  if (half_len < 1) throw std::runtime_error("ricker: half_len must be >= 1");
  std::vector<double> w(2 * half_len + 1);
  for (int k = -half_len; k <= half_len; ++k) {
    const double t = k * dt;
    const double a = M_PI * M_PI * peak_hz * peak_hz * t * t;
    w[k + half_len] = (1.0 - 2.0 * a) * std::exp(-a);
  }
  return w;
}

Section synthesize_seismic(const Section& refl, const std::vector<double>& wavelet,
                           double snr_db, uint64_t seed) {
  const int len = static_cast<int>(wavelet.size());
  if (len == 0 || len % 2 == 0)
    throw std::runtime_error("synthesize_seismic: wavelet length must be odd");
  if (len >= refl.n_samples)
    throw std::runtime_error("synthesize_seismic: wavelet must be shorter than trace");
  const int half = (len - 1) / 2;

  Section out(refl.n_traces, refl.n_samples);
  for (int tr = 0; tr < refl.n_traces; ++tr) {
    for (int t = 0; t < refl.n_samples; ++t) {
      double acc = 0.0;
      const int k_lo = std::max(-half, t - (refl.n_samples - 1));
      const int k_hi = std::min(half, t);
      for (int k = k_lo; k <= k_hi; ++k) acc += wavelet[k + half] * refl.at(tr, t - k);
      out.at(tr, t) = acc;
    }
  }

  if (std::isfinite(snr_db)) {
    double power = 0.0;
    for (double x : out.v) power += x * x;
    power /= static_cast<double>(out.v.size());
    const double noise_sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
    if (noise_sigma > 0.0) {
      Rng rng(seed);
      for (double& x : out.v) x += rng.normal(0.0, noise_sigma);
    }
  }
  return out;
}

namespace {

Volume3D make_volume(const GeoModelConfig& cfg, const std::string& label) {
  Volume3D v(cfg.n_inlines, cfg.n_crosslines, cfg.n_samples);
  v.dt = cfg.dt;
  v.dx = cfg.dx;
  v.dy = cfg.dy;
  v.label = label;
  return v;
}

void fill_inline(Volume3D& v, int il, const Section& s) {
  for (int xl = 0; xl < v.n_crosslines; ++xl)
    for (int k = 0; k < v.n_samples; ++k) v.at(il, xl, k) = s.at(xl, k);
}

const char* kRoles[4] = {"seismic", "v_avg", "twt", "v_int"};

}  // namespace

std::string DatasetManifest::volume_path(const std::string& role) const {
  return dir + "/" + kv.get("file." + role);
}

DatasetManifest build_dataset(const GeoModelConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  GeoModel model(cfg);
  Volume3D seismic = make_volume(cfg, "seismic");
  Volume3D v_avg = make_volume(cfg, "v_avg");
  Volume3D twt = make_volume(cfg, "twt");
  Volume3D v_int = make_volume(cfg, "v_int_fwi");

  for (int il = 0; il < cfg.n_inlines; ++il) {
    const SectionSet set = model.section_set(il);
    fill_inline(seismic, il, set.seismic);
    fill_inline(v_avg, il, set.v_avg);
    fill_inline(twt, il, set.twt);
    fill_inline(v_int, il, set.v_int);
  }

  DatasetManifest m;
  m.dir = out_dir;
  m.kv.set("format", "velgan-dataset-v1");
  m.kv.set_i64("geo.n_inlines", cfg.n_inlines);
  m.kv.set_i64("geo.n_crosslines", cfg.n_crosslines);
  m.kv.set_i64("geo.n_samples", cfg.n_samples);
  m.kv.set_f64("geo.dt", cfg.dt);
  m.kv.set_f64("geo.dx", cfg.dx);
  m.kv.set_f64("geo.dy", cfg.dy);
  m.kv.set_i64("geo.n_layers", cfg.n_layers);
  m.kv.set_f64("geo.v_water", cfg.v_water);
  m.kv.set_f64("geo.v_min", cfg.v_min);
  m.kv.set_f64("geo.v_max", cfg.v_max);
  m.kv.set_f64("geo.horizon_roughness", cfg.horizon_roughness);
  m.kv.set_f64("geo.salt_probability", cfg.salt_probability);
  m.kv.set_f64("geo.salt_velocity", cfg.salt_velocity);
  m.kv.set_f64("geo.wavelet_peak_hz", cfg.wavelet_peak_hz);
  m.kv.set_f64("geo.snr_db", cfg.snr_db);
  m.kv.set_i64("geo.seed", static_cast<int64_t>(cfg.seed));
  m.kv.set("salt_present", model.has_salt() ? "true" : "false");

  const Volume3D* vols[4] = {&seismic, &v_avg, &twt, &v_int};
  for (int i = 0; i < 4; ++i) {
    const std::string file = std::string(kRoles[i]) + ".sgy";
    write_segy(*vols[i], out_dir + "/" + file);
    m.kv.set("file." + std::string(kRoles[i]), file);
    char crc[16];
    std::snprintf(crc, sizeof crc, "0x%08x", crc32_volume_samples(*vols[i]));
    m.kv.set("crc32." + std::string(kRoles[i]), crc);
  }
  m.kv.save(out_dir + "/manifest.txt");
  return m;
}

DatasetManifest load_dataset_manifest(const std::string& dir) {
  DatasetManifest m;
  m.dir = dir;
  m.kv = KeyValueFile::load(dir + "/manifest.txt");
  return m;
}

}  // namespace velgan
