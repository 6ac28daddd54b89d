#include "velgan/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "velgan/checkpoint.hpp"
#include "velgan/image.hpp"
#include "velgan/segy.hpp"

namespace velgan {

namespace fs = std::filesystem;

std::string RunPaths::epoch_checkpoint(int epoch) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "/ckpt_epoch%03d.vgc", epoch);
  return dir + buf;
}

namespace {

std::string fmt_or_empty(double v) {
  if (!(v == v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double parse_or_nan(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace

void append_epoch_log_csv(const std::string& path, const EpochLog& log) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("log: cannot open '" + path + "'");
  if (fresh)
    out << "epoch,d_loss,g_adv,g_l1,g_total,test_pe,test_ssim,wall_time_s\n";
  out << log.epoch << "," << fmt_or_empty(log.d_loss) << ","
      << fmt_or_empty(log.g_adv) << "," << fmt_or_empty(log.g_l1) << ","
      << fmt_or_empty(log.g_total) << "," << fmt_or_empty(log.test_pe) << ","
      << fmt_or_empty(log.test_ssim) << "," << fmt_or_empty(log.wall_time_s)
      << "\n";
  out.flush();
  if (!out) throw std::runtime_error("log: write failed for '" + path + "'");
}

std::vector<EpochLog> read_epoch_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("log: cannot open '" + path + "'");
  std::vector<EpochLog> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {  // header
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(8);
    EpochLog log;
    log.epoch = static_cast<int>(std::stol(cells[0]));
    log.d_loss = parse_or_nan(cells[1]);
    log.g_adv = parse_or_nan(cells[2]);
    log.g_l1 = parse_or_nan(cells[3]);
    log.g_total = parse_or_nan(cells[4]);
    log.test_pe = parse_or_nan(cells[5]);
    log.test_ssim = parse_or_nan(cells[6]);
    log.wall_time_s = parse_or_nan(cells[7]);
    rows.push_back(log);
  }
  return rows;
}

DatasetManifest cmd_synth(const RunConfig& cfg) {
  return build_dataset(cfg.geo, cfg.dataset_dir);
}

std::vector<EpochLog> cmd_train(const RunConfig& cfg) {
  const DatasetManifest manifest = load_dataset_manifest(cfg.dataset_dir);
  const PreparedDataset prep = prepare_dataset(manifest, cfg.prep);

  RunPaths paths{cfg.out_dir};
  fs::create_directories(paths.dir);

  ConfigFile frozen;
  cfg.to_config(frozen);
  frozen.save(paths.config_copy());
  KeyValueFile stats_kv;
  prep.stats.to_kv(stats_kv);
  stats_kv.set_i64("prep.n_train_patches", cfg.prep.n_train_patches);
  stats_kv.set_i64("prep.n_test_patches", cfg.prep.n_test_patches);
  stats_kv.set_i64("prep.seed", static_cast<int64_t>(cfg.prep.seed));
  stats_kv.set_i64("train.seed", static_cast<int64_t>(cfg.train_seed));
  stats_kv.save(paths.stats_file());

  TrainState state = [&] {
    if (cfg.resume.empty())
      return TrainState(cfg.generator_spec(), cfg.discriminator_spec(), cfg.loss,
                        cfg.optim, cfg.train_seed);
    TrainState s = load_checkpoint(cfg.resume);
    if (s.stats.patch_size != prep.stats.patch_size ||
        s.stats.input_channels != prep.stats.input_channels ||
        s.stats.crop_top != prep.stats.crop_top)
      throw std::runtime_error(
          "train: checkpoint preprocessing does not match this configuration");
    return s;
  }();
  state.stats = prep.stats;

  const int remaining = cfg.epochs - state.epoch;
  if (remaining <= 0)
    throw std::runtime_error("train: checkpoint already at epoch " +
                             std::to_string(state.epoch) + " >= target " +
                             std::to_string(cfg.epochs));

  TrainOptions opts;
  opts.epochs = remaining;
  opts.on_epoch = [&](TrainState& st, EpochLog& log) {
    const bool last = st.epoch == cfg.epochs;
    if ((cfg.evaluate_every > 0 && st.epoch % cfg.evaluate_every == 0) || last) {
      const MetricReport rep =
          evaluate(st.G, prep.test_patches, st.stats, 0, cfg.ssim_window);
      log.test_pe = rep.pe_mean;
      log.test_ssim = rep.ssim_mean;
    }
    if ((cfg.checkpoint_every > 0 && st.epoch % cfg.checkpoint_every == 0) || last)
      save_checkpoint(st, paths.epoch_checkpoint(st.epoch));
    append_epoch_log_csv(paths.log_csv(), log);
  };

  std::vector<EpochLog> logs = train(state, prep.train_patches, opts);
  save_checkpoint(state, paths.final_checkpoint());
  return logs;
}

namespace {

struct FrozenVolumes {
  std::array<Volume3D, 4> vol;  // normalized, cropped; v_int optional
  bool has_target = false;
};

FrozenVolumes apply_frozen_pipeline(const DatasetManifest& manifest,
                                    const FrozenStats& stats) {
  FrozenVolumes out;
  for (int i = 0; i < 4; ++i) {
    const std::string role = role_name(static_cast<Role>(i));
    if (i == static_cast<int>(Role::v_int) && !manifest.kv.has("file." + role))
      continue;
    Volume3D v = read_segy(manifest.volume_path(role));
    v.label = role;
    v = clip_two_sigma(v, stats.clip[i]);
    v = crop_water_column(v, stats.crop_top);
    out.vol[i] = normalize(v, stats.norm[i]);
    if (i == static_cast<int>(Role::v_int)) out.has_target = true;
  }
  const Volume3D& ref = out.vol[0];
  for (int i = 1; i < 4; ++i) {
    if (i == 3 && !out.has_target) continue;
    if (out.vol[i].n_inlines != ref.n_inlines ||
        out.vol[i].n_crosslines != ref.n_crosslines ||
        out.vol[i].n_samples != ref.n_samples)
      throw std::runtime_error("pipeline: volume geometry mismatch across roles");
  }
  return out;
}

void write_report_files(const MetricReport& rep, const std::string& out_dir,
                        const std::string& ckpt_path) {
  fs::create_directories(out_dir);

  std::ofstream csv(out_dir + "/report.csv", std::ios::trunc);
  if (!csv) throw std::runtime_error("report: cannot write report.csv");
  csv << "# checkpoint = " << ckpt_path << "\n";
  char crc[16];
  std::snprintf(crc, sizeof crc, "0x%08x", crc32_file(ckpt_path));
  csv << "# checkpoint_crc32 = " << crc << "\n";
  csv << "# ssim_mode = " << rep.ssim_mode << "\n";
  csv << "# n_patches = " << rep.n_patches << "\n";
  csv << "# pe_mean = " << rep.pe_mean << "\n";
  csv << "# ssim_mean = " << rep.ssim_mean << "\n";
  csv << "# norm_min = " << rep.norm_used.x_min << "\n";
  csv << "# norm_max = " << rep.norm_used.x_max << "\n";
  csv << "patch,pe,ssim\n";
  for (size_t i = 0; i < rep.per_patch_pe.size(); ++i)
    csv << i << "," << rep.per_patch_pe[i] << "," << rep.per_patch_ssim[i] << "\n";

  std::ofstream hist(out_dir + "/histogram.csv", std::ios::trunc);
  hist << "bin_lo,bin_hi,count_true,count_pred\n";
  const int bins = static_cast<int>(rep.hist_true.counts.size());
  const double bw = (rep.hist_true.hi - rep.hist_true.lo) / bins;
  for (int i = 0; i < bins; ++i)
    hist << rep.hist_true.lo + i * bw << "," << rep.hist_true.lo + (i + 1) * bw << ","
         << rep.hist_true.counts[i] << "," << rep.hist_pred.counts[i] << "\n";
  write_png(render_histogram_pair(rep.hist_true, rep.hist_pred),
            out_dir + "/histogram.png");

  for (size_t i = 0; i < rep.map_indices.size(); ++i) {
    double pe_hi = 5.0;
    for (double v : rep.pe_maps[i].v) pe_hi = std::max(pe_hi, v);
    std::vector<ImageRGB> panels;
    panels.push_back(render_section(rep.target_panels[i], rep.norm_used.x_min,
                                    rep.norm_used.x_max, Colormap::viridis));
    panels.push_back(render_section(rep.pred_panels[i], rep.norm_used.x_min,
                                    rep.norm_used.x_max, Colormap::viridis));
    panels.push_back(render_section(rep.pe_maps[i], 0.0, pe_hi, Colormap::hot));
    if (i < rep.ssim_maps.size())
      panels.push_back(render_section(rep.ssim_maps[i], 0.0, 1.0, Colormap::gray));
    char name[32];
    std::snprintf(name, sizeof name, "/panel_%03zu.png", i);
    write_png(hstack(panels), out_dir + name);
  }
}

}  // namespace

MetricReport cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                          const std::string& out_dir) {
  TrainState state = load_checkpoint(checkpoint_path);
  const DatasetManifest manifest = load_dataset_manifest(cfg.dataset_dir);
  const FrozenVolumes fv = apply_frozen_pipeline(manifest, state.stats);
  if (!fv.has_target)
    throw std::runtime_error("evaluate: dataset has no target (v_int) volume");

  const Region test{state.stats.boundary_index, fv.vol[0].n_crosslines};
  const std::vector<PatchPair> patches = sample_patches(
      fv.vol[0], fv.vol[1], fv.vol[2], fv.vol[3], test, cfg.prep.n_test_patches,
      state.stats.patch_size, Rng::mix(cfg.prep.seed, 0x7e57u),
      state.stats.input_channels);

  const MetricReport rep = evaluate(state.G, patches, state.stats,
                                    cfg.eval_map_patches, cfg.ssim_window);
  write_report_files(rep, out_dir, checkpoint_path);
  return rep;
}

namespace {

// Cosine taper (Hann) tile weights; strictly positive everywhere.
std::vector<double> hann_weights(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 0.5) / n);
  return w;
}

std::vector<int> tile_offsets(int length, int patch) {
  std::vector<int> offs;
  const int stride = std::max(1, patch / 2);
  for (int at = 0; at + patch <= length; at += stride) offs.push_back(at);
  if (offs.empty() || offs.back() != length - patch) offs.push_back(length - patch);
  return offs;
}

}  // namespace

void cmd_predict(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& out_segy_path) {
  TrainState state = load_checkpoint(checkpoint_path);
  const DatasetManifest manifest = load_dataset_manifest(cfg.dataset_dir);
  const FrozenVolumes fv = apply_frozen_pipeline(manifest, state.stats);

  const int patch = state.stats.patch_size;
  const Volume3D& seis = fv.vol[0];
  if (seis.n_crosslines < patch || seis.n_samples < patch)
    throw std::runtime_error(
        "predict: cropped volume smaller than the checkpoint patch size");

  // Raw v_avg fills the cropped water rows of the output; above the first
  // reflector average and interval velocity coincide.
  Volume3D v_avg_raw = read_segy(manifest.volume_path("v_avg"));

  const int in_ch = state.stats.input_channels;
  const NormStats vnorm = state.stats.norm[static_cast<int>(Role::v_int)];
  const std::vector<double> wt = hann_weights(patch);
  const std::vector<int> cx_offs = tile_offsets(seis.n_crosslines, patch);
  const std::vector<int> tz_offs = tile_offsets(seis.n_samples, patch);

  Volume3D out(seis.n_inlines, seis.n_crosslines,
               seis.n_samples + state.stats.crop_top);
  out.dx = seis.dx;
  out.dy = seis.dy;
  out.dt = seis.dt;
  out.first_inline = seis.first_inline;
  out.first_crossline = seis.first_crossline;
  out.label = "v_int_pred";

  nn::Tensor<float> x(1, in_ch, patch, patch);
  for (int il = 0; il < seis.n_inlines; ++il) {
    Section acc(seis.n_crosslines, seis.n_samples);
    Section den(seis.n_crosslines, seis.n_samples);
    for (int cx : cx_offs) {
      for (int tz : tz_offs) {
        for (int c = 0; c < in_ch; ++c) {
          const Volume3D& src = fv.vol[c];
          float* dst = x.plane(0, c);
          for (int y = 0; y < patch; ++y)
            for (int xx = 0; xx < patch; ++xx)
              dst[static_cast<size_t>(y) * patch + xx] =
                  2.f * static_cast<float>(src.at(il, cx + xx, tz + y)) - 1.f;
        }
        const nn::Tensor<float> pred = state.G.forward(x, false);
        const float* sp = pred.plane(0, 0);
        for (int y = 0; y < patch; ++y)
          for (int xx = 0; xx < patch; ++xx) {
            const double v01 = 0.5 * (sp[static_cast<size_t>(y) * patch + xx] + 1.f);
            const double wgt = wt[y] * wt[xx];
            acc.at(cx + xx, tz + y) += wgt * v01;
            den.at(cx + xx, tz + y) += wgt;
          }
      }
    }
    for (int xl = 0; xl < seis.n_crosslines; ++xl) {
      for (int k = 0; k < state.stats.crop_top; ++k)
        out.at(il, xl, k) = v_avg_raw.at(il, xl, k);
      for (int k = 0; k < seis.n_samples; ++k) {
        const double v01 = acc.at(xl, k) / den.at(xl, k);
        out.at(il, xl, state.stats.crop_top + k) =
            vnorm.x_min + v01 * (vnorm.x_max - vnorm.x_min);
      }
    }
  }
  write_segy(out, out_segy_path);
}

ReportSummary cmd_report(const std::string& run_dir) {
  RunPaths paths{run_dir};
  if (!fs::exists(paths.log_csv()))
    throw std::runtime_error("report: no epoch log at '" + paths.log_csv() + "'");
  const std::vector<EpochLog> rows = read_epoch_log_csv(paths.log_csv());
  if (rows.empty()) throw std::runtime_error("report: epoch log is empty");

  std::vector<double> ep, pe, ssim;
  for (const EpochLog& r : rows) {
    if (!r.has_test_metrics()) continue;
    ep.push_back(r.epoch);
    pe.push_back(r.test_pe);
    ssim.push_back(r.test_ssim);
  }
  if (ep.empty())
    throw std::runtime_error("report: log has no test-metric rows");

  write_png(render_curve(ep, pe), run_dir + "/report_pe.png");
  write_png(render_curve(ep, ssim), run_dir + "/report_ssim.png");

  ReportSummary s;
  s.n_epochs = rows.back().epoch;
  size_t best = 0;
  for (size_t i = 1; i < pe.size(); ++i)
    if (pe[i] < pe[best]) best = i;
  s.best_epoch = static_cast<int>(ep[best]);
  s.best_test_pe = pe[best];
  s.final_test_pe = pe.back();
  s.final_test_ssim = ssim.back();
  size_t best_ssim = 0;
  for (size_t i = 1; i < ssim.size(); ++i)
    if (ssim[i] > ssim[best_ssim]) best_ssim = i;
  s.best_test_ssim = ssim[best_ssim];

  std::ofstream sum(paths.summary_file(), std::ios::trunc);
  sum << "n_epochs = " << s.n_epochs << "\n"
      << "best_epoch = " << s.best_epoch << "\n"
      << "best_test_pe = " << s.best_test_pe << "\n"
      << "final_test_pe = " << s.final_test_pe << "\n"
      << "best_test_ssim = " << s.best_test_ssim << "\n"
      << "final_test_ssim = " << s.final_test_ssim << "\n";
  if (!sum) throw std::runtime_error("report: cannot write summary");
  return s;
}

}  // namespace velgan
