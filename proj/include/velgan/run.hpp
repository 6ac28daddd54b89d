#pragma once

#include <string>
#include <vector>

#include "velgan/config.hpp"
#include "velgan/metrics.hpp"
#include "velgan/train.hpp"

namespace velgan {

// Canonical file locations inside a run directory.
struct RunPaths {
  std::string dir;
  std::string config_copy() const { return dir + "/config.ini"; }
  std::string stats_file() const { return dir + "/stats.txt"; }
  std::string log_csv() const { return dir + "/log.csv"; }
  std::string final_checkpoint() const { return dir + "/ckpt_final.vgc"; }
  std::string epoch_checkpoint(int epoch) const;
  std::string summary_file() const { return dir + "/summary.txt"; }
};

void append_epoch_log_csv(const std::string& path, const EpochLog& log);
std::vector<EpochLog> read_epoch_log_csv(const std::string& path);

// synth: generate the four-volume dataset plus manifest.
DatasetManifest cmd_synth(const RunConfig& cfg);

// train: preprocess, run the training loop with evaluation/checkpoint
// cadences, write the frozen config, stats, epoch log and checkpoints.
// train.epochs is the target total, so resuming continues the counter.
// Returns the log rows produced by this invocation.
std::vector<EpochLog> cmd_train(const RunConfig& cfg);

// evaluate: full metric report + figure files for a checkpoint on the test
// region of a dataset. Returns the report.
MetricReport cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                          const std::string& out_dir);

// predict: tile inline sections with 50% overlap, cosine-taper blending,
// deterministic inference, denormalize, write SEG-Y.
void cmd_predict(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& out_segy_path);

struct ReportSummary {
  int best_epoch = 0;
  double best_test_pe = 0.0;
  double final_test_pe = 0.0;
  double best_test_ssim = 0.0;
  double final_test_ssim = 0.0;
  int n_epochs = 0;
};

// report: PE/SSIM-versus-epoch figures plus a text summary from a run log.
ReportSummary cmd_report(const std::string& run_dir);

}  // namespace velgan
