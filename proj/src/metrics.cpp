#include "velgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace velgan {

void SsimConfig::validate() const {
  if (!(data_range > 0.0))
    throw std::runtime_error("ssim: data_range must be > 0");
  if (!(k1 > 0.0) || !(k2 > 0.0))
    throw std::runtime_error("ssim: k1 and k2 must be > 0");
  if (window_size < 3 || window_size % 2 == 0)
    throw std::runtime_error("ssim: window size must be odd and >= 3");
  if (!(window_sigma > 0.0))
    throw std::runtime_error("ssim: window sigma must be > 0");
}

namespace {

void check_same_shape(const Section& a, const Section& b, const char* who) {
  if (a.n_traces != b.n_traces || a.n_samples != b.n_samples)
    throw std::runtime_error(std::string(who) + ": section shape mismatch");
  if (a.size() == 0) throw std::runtime_error(std::string(who) + ": empty section");
}

struct GlobalStats {
  double mu_y, mu_p, var_y, var_p, cov;
};

GlobalStats global_stats(const Section& y, const Section& p) {
  GlobalStats g{};
  const size_t n = y.size();
  for (size_t i = 0; i < n; ++i) {
    g.mu_y += y.v[i];
    g.mu_p += p.v[i];
  }
  g.mu_y /= static_cast<double>(n);
  g.mu_p /= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    const double dy = y.v[i] - g.mu_y;
    const double dp = p.v[i] - g.mu_p;
    g.var_y += dy * dy;
    g.var_p += dp * dp;
    g.cov += dy * dp;
  }
  g.var_y /= static_cast<double>(n);
  g.var_p /= static_cast<double>(n);
  g.cov /= static_cast<double>(n);
  return g;
}

// Symmetric (mirror-with-edge) index for boundary handling.
inline int mirror(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

// Separable Gaussian filter with symmetric padding, normalized kernel.
Section gauss_filter(const Section& img, int size, double sigma) {
  const int r = size / 2;
  std::vector<double> k(size);
  double ksum = 0.0;
  for (int d = -r; d <= r; ++d) {
    k[d + r] = std::exp(-0.5 * (d / sigma) * (d / sigma));
    ksum += k[d + r];
  }
  for (double& v : k) v /= ksum;

  const int nt = img.n_traces, ns = img.n_samples;
  if (nt < r + 1 || ns < r + 1)
    throw std::runtime_error("ssim: section smaller than filter radius");
  Section tmp(nt, ns), out(nt, ns);
  for (int t = 0; t < nt; ++t)
    for (int s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) acc += k[d + r] * img.at(t, mirror(s + d, ns));
      tmp.at(t, s) = acc;
    }
  for (int t = 0; t < nt; ++t)
    for (int s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) acc += k[d + r] * tmp.at(mirror(t + d, nt), s);
      out.at(t, s) = acc;
    }
  return out;
}

}  // namespace

double percent_error(const Section& y, const Section& y_hat) {
  check_same_shape(y, y_hat, "percent_error");
  double acc = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (!(y.v[i] > 0.0))
      throw std::runtime_error("percent_error: reference velocity must be > 0");
    acc += std::abs(y.v[i] - y_hat.v[i]) / y.v[i];
  }
  return acc / static_cast<double>(y.size()) * 100.0;
}

Section percent_error_map(const Section& y, const Section& y_hat) {
  check_same_shape(y, y_hat, "percent_error_map");
  Section m(y.n_traces, y.n_samples);
  for (size_t i = 0; i < y.size(); ++i) {
    if (!(y.v[i] > 0.0))
      throw std::runtime_error("percent_error_map: reference velocity must be > 0");
    m.v[i] = std::abs(y.v[i] - y_hat.v[i]) / y.v[i] * 100.0;
  }
  return m;
}

SsimComponents ssim_components(const Section& y, const Section& y_hat,
                               const SsimConfig& cfg) {
  cfg.validate();
  check_same_shape(y, y_hat, "ssim_components");
  const GlobalStats g = global_stats(y, y_hat);
  const double sd_y = std::sqrt(g.var_y);
  const double sd_p = std::sqrt(g.var_p);
  SsimComponents out{};
  out.l = (2.0 * g.mu_y * g.mu_p + cfg.c1()) /
          (g.mu_y * g.mu_y + g.mu_p * g.mu_p + cfg.c1());
  out.c = (2.0 * sd_y * sd_p + cfg.c2()) / (g.var_y + g.var_p + cfg.c2());
  out.s = (g.cov + cfg.c3()) / (sd_y * sd_p + cfg.c3());
  return out;
}

double ssim(const Section& y, const Section& y_hat, const SsimConfig& cfg) {
  cfg.validate();
  check_same_shape(y, y_hat, "ssim");
  if (cfg.window == SsimConfig::Window::gaussian) {
    const Section m = ssim_map(y, y_hat, cfg);
    double acc = 0.0;
    for (double v : m.v) acc += v;
    return acc / static_cast<double>(m.size());
  }
  const GlobalStats g = global_stats(y, y_hat);
  return (2.0 * g.mu_y * g.mu_p + cfg.c1()) * (2.0 * g.cov + cfg.c2()) /
         ((g.mu_y * g.mu_y + g.mu_p * g.mu_p + cfg.c1()) *
          (g.var_y + g.var_p + cfg.c2()));
}

Section ssim_map(const Section& y, const Section& y_hat, const SsimConfig& cfg) {
  cfg.validate();
  if (cfg.window != SsimConfig::Window::gaussian)
    throw std::runtime_error("ssim_map: requires the gaussian window mode");
  check_same_shape(y, y_hat, "ssim_map");

  Section yy(y.n_traces, y.n_samples), pp(y.n_traces, y.n_samples),
      yp(y.n_traces, y.n_samples);
  for (size_t i = 0; i < y.size(); ++i) {
    yy.v[i] = y.v[i] * y.v[i];
    pp.v[i] = y_hat.v[i] * y_hat.v[i];
    yp.v[i] = y.v[i] * y_hat.v[i];
  }
  const Section mu_y = gauss_filter(y, cfg.window_size, cfg.window_sigma);
  const Section mu_p = gauss_filter(y_hat, cfg.window_size, cfg.window_sigma);
  const Section e_yy = gauss_filter(yy, cfg.window_size, cfg.window_sigma);
  const Section e_pp = gauss_filter(pp, cfg.window_size, cfg.window_sigma);
  const Section e_yp = gauss_filter(yp, cfg.window_size, cfg.window_sigma);

  Section out(y.n_traces, y.n_samples);
  for (size_t i = 0; i < out.size(); ++i) {
    const double my = mu_y.v[i], mp = mu_p.v[i];
    const double var_y = e_yy.v[i] - my * my;
    const double var_p = e_pp.v[i] - mp * mp;
    const double cov = e_yp.v[i] - my * mp;
    out.v[i] = (2.0 * my * mp + cfg.c1()) * (2.0 * cov + cfg.c2()) /
               ((my * my + mp * mp + cfg.c1()) * (var_y + var_p + cfg.c2()));
  }
  return out;
}

int64_t Histogram::total() const {
  int64_t t = 0;
  for (int64_t c : counts) t += c;
  return t;
}

Histogram velocity_histogram(const std::vector<const Section*>& sections, int bins,
                             double lo, double hi) {
  if (bins < 1) throw std::runtime_error("histogram: bins must be >= 1");
  if (!(hi > lo)) throw std::runtime_error("histogram: empty range");
  bool any = false;
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<size_t>(bins), 0);
  for (const Section* s : sections) {
    for (double v : s->v) {
      any = true;
      int b = static_cast<int>((v - lo) / (hi - lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ++h.counts[static_cast<size_t>(b)];
    }
  }
  if (!any) throw std::runtime_error("histogram: no input samples");
  return h;
}

namespace {

Section denorm_patch(const Patch& p, const NormStats& n) {
  Section s(p.h, p.w);
  const double span = n.x_max - n.x_min;
  for (size_t i = 0; i < p.v.size(); ++i)
    s.v[i] = n.x_min + static_cast<double>(p.v[i]) * span;
  return s;
}

}  // namespace

MetricReport evaluate_with(const InferFn& infer, const std::vector<PatchPair>& patches,
                           const FrozenStats& stats, int n_map_patches,
                           SsimConfig::Window window, int histogram_bins) {
  if (patches.empty()) throw std::runtime_error("evaluate: empty test set");
  const NormStats vnorm = stats.norm[static_cast<int>(Role::v_int)];
  vnorm.validate();

  SsimConfig scfg;
  scfg.data_range = vnorm.x_max - vnorm.x_min;
  scfg.window = window;

  MetricReport rep;
  rep.ssim_mode = window == SsimConfig::Window::gaussian ? "gaussian" : "global";
  rep.norm_used = vnorm;
  rep.n_patches = static_cast<int>(patches.size());

  std::vector<const Section*> true_secs, pred_secs;
  std::vector<Section> storage_true, storage_pred;
  storage_true.reserve(patches.size());
  storage_pred.reserve(patches.size());

  for (size_t i = 0; i < patches.size(); ++i) {
    const PatchPair& pp = patches[i];
    const Patch pred = infer(pp);
    if (pred.h != pp.target.h || pred.w != pp.target.w)
      throw std::runtime_error("evaluate: prediction shape mismatch");

    storage_true.push_back(denorm_patch(pp.target, vnorm));
    storage_pred.push_back(denorm_patch(pred, vnorm));
    const Section& y = storage_true.back();
    const Section& y_hat = storage_pred.back();

    rep.per_patch_pe.push_back(percent_error(y, y_hat));
    rep.per_patch_ssim.push_back(ssim(y, y_hat, scfg));

    if (static_cast<int>(rep.map_indices.size()) < n_map_patches) {
      rep.map_indices.push_back(static_cast<int>(i));
      rep.target_panels.push_back(y);
      rep.pred_panels.push_back(y_hat);
      rep.pe_maps.push_back(percent_error_map(y, y_hat));
      if (window == SsimConfig::Window::gaussian)
        rep.ssim_maps.push_back(ssim_map(y, y_hat, scfg));
    }
  }

  for (const Section& s : storage_true) true_secs.push_back(&s);
  for (const Section& s : storage_pred) pred_secs.push_back(&s);
  rep.hist_true = velocity_histogram(true_secs, histogram_bins, vnorm.x_min, vnorm.x_max);
  rep.hist_pred = velocity_histogram(pred_secs, histogram_bins, vnorm.x_min, vnorm.x_max);

  double pe_acc = 0.0, ssim_acc = 0.0;
  for (double v : rep.per_patch_pe) pe_acc += v;
  for (double v : rep.per_patch_ssim) ssim_acc += v;
  rep.pe_mean = pe_acc / rep.per_patch_pe.size();
  rep.ssim_mean = ssim_acc / rep.per_patch_ssim.size();
  return rep;
}

MetricReport evaluate(nn::UNetGenerator<float>& generator,
                      const std::vector<PatchPair>& patches,
                      const FrozenStats& stats, int n_map_patches,
                      SsimConfig::Window window, int histogram_bins) {
  const InferFn infer = [&generator](const PatchPair& pp) {
    nn::Tensor<float> x(1, static_cast<int>(pp.input.size()), pp.target.h,
                        pp.target.w);
    for (size_t c = 0; c < pp.input.size(); ++c) {
      float* dst = x.plane(0, static_cast<int>(c));
      for (size_t q = 0; q < pp.input[c].v.size(); ++q)
        dst[q] = 2.f * pp.input[c].v[q] - 1.f;
    }
    const nn::Tensor<float> out = generator.forward(x, false);
    Patch pred(pp.target.h, pp.target.w);
    const float* src = out.plane(0, 0);
    for (size_t q = 0; q < pred.v.size(); ++q)
      pred.v[q] = 0.5f * (src[q] + 1.f);  // tanh range back to [0,1]
    return pred;
  };
  return evaluate_with(infer, patches, stats, n_map_patches, window, histogram_bins);
}

}  // namespace velgan
