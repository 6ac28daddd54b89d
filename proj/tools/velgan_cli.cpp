// Command-line front end: synth | train | evaluate | predict | report.
// Every subcommand takes --config plus repeatable --set section.key=value
// overrides; exit code 0 on success, 1 with a diagnostic on stderr otherwise.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "velgan/checkpoint.hpp"
#include "velgan/run.hpp"

namespace {

velgan::RunConfig load_run_config(const std::string& config_path,
                                  const std::vector<std::string>& overrides) {
  velgan::ConfigFile cf = config_path.empty()
                              ? velgan::ConfigFile::from_text("")
                              : velgan::ConfigFile::load(config_path);
  for (const std::string& kv : overrides) cf.apply_override(kv);
  return velgan::RunConfig::from_config(cf);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"velgan - seismic-to-velocity cGAN pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string checkpoint, out_path;

  auto add_common = [&](CLI::App* cmd, bool need_config) {
    auto* opt = cmd->add_option("--config", config_path, "run configuration (INI)");
    if (need_config) opt->required();
    cmd->add_option("--set", overrides, "override: section.key=value")
        ->take_all();
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, true);

  CLI::App* train = app.add_subcommand("train", "train the cGAN on a dataset");
  add_common(train, true);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "metric report for a checkpoint");
  add_common(evaluate, true);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  evaluate->add_option("--out", out_path, "report output directory");

  CLI::App* predict =
      app.add_subcommand("predict", "full-volume velocity prediction");
  add_common(predict, true);
  predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict->add_option("--out", out_path, "output SEG-Y path")->required();

  CLI::App* report = app.add_subcommand("report", "epoch curves and summary");
  std::string run_dir;
  report->add_option("--run", run_dir, "run directory with log.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const velgan::RunConfig cfg = load_run_config(config_path, overrides);
      const velgan::DatasetManifest m = cmd_synth(cfg);
      std::printf("dataset written to %s\n", m.dir.c_str());
      for (const char* role : {"seismic", "v_avg", "twt", "v_int"})
        std::printf("  %-8s %s  crc32 %s\n", role,
                    m.kv.get("file." + std::string(role)).c_str(),
                    m.kv.get("crc32." + std::string(role)).c_str());
    } else if (train->parsed()) {
      const velgan::RunConfig cfg = load_run_config(config_path, overrides);
      const auto logs = cmd_train(cfg);
      for (const velgan::EpochLog& log : logs) {
        std::printf("epoch %3d  d %.4f  g_adv %.4f  g_l1 %.5f", log.epoch,
                    log.d_loss, log.g_adv, log.g_l1);
        if (log.has_test_metrics())
          std::printf("  test_pe %.3f%%  test_ssim %.4f", log.test_pe,
                      log.test_ssim);
        std::printf("  (%.1fs)\n", log.wall_time_s);
        std::fflush(stdout);
      }
      std::printf("final checkpoint: %s/ckpt_final.vgc\n", cfg.out_dir.c_str());
    } else if (evaluate->parsed()) {
      const velgan::RunConfig cfg = load_run_config(config_path, overrides);
      const std::string dir = out_path.empty() ? cfg.out_dir + "/eval" : out_path;
      const velgan::MetricReport rep = cmd_evaluate(cfg, checkpoint, dir);
      std::printf("n_patches %d  pe_mean %.4f%%  ssim_mean(%s) %.5f\n",
                  rep.n_patches, rep.pe_mean, rep.ssim_mode.c_str(), rep.ssim_mean);
      std::printf("report written to %s\n", dir.c_str());
    } else if (predict->parsed()) {
      const velgan::RunConfig cfg = load_run_config(config_path, overrides);
      cmd_predict(cfg, checkpoint, out_path);
      std::printf("predicted velocity volume written to %s\n", out_path.c_str());
    } else if (report->parsed()) {
      const velgan::ReportSummary s = velgan::cmd_report(run_dir);
      std::printf("epochs %d  best epoch %d  best PE %.4f%%  final PE %.4f%%  "
                  "best SSIM %.5f\n",
                  s.n_epochs, s.best_epoch, s.best_test_pe, s.final_test_pe,
                  s.best_test_ssim);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
