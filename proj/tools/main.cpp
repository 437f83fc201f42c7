// Command-line front end for the grant-free SCMA activity-detection lab.
// Links only the public C API; options are marshalled as JSON.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gfscma/gfscma.h"

using nlohmann::json;

namespace {

// 0 success, 1 runtime/invariant failure, 2 usage error.
int exit_code(int status) {
  switch (status) {
    case GFS_OK:
      return 0;
    case GFS_ERR_INVALID_ARGUMENT:
    case GFS_ERR_PARSE:
      return 2;
    default:
      return 1;
  }
}

int finish(int status) {
  if (status != GFS_OK) std::fprintf(stderr, "error: %s\n", gfs_last_error());
  return exit_code(status);
}

std::string default_out_dir() {
  const char* env = std::getenv("GFSCMA_OUT_DIR");
  return env && *env ? env : ".";
}

// Relative outputs land in $GFSCMA_OUT_DIR (default ".").
std::string resolve_out(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  return default_out_dir() + "/" + path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grant-free SCMA activity-detection laboratory"};
  app.require_subcommand(1);

  // ctu build
  auto* ctu = app.add_subcommand("ctu", "Contention-transmission-unit tools");
  ctu->require_subcommand(1);
  auto* build = ctu->add_subcommand("build", "Build a preamble/codebook map");
  uint32_t n_zc = 7, shifts = 7;
  std::vector<uint32_t> roots = {1, 2, 3, 4, 5, 6};
  std::string assoc = "random", build_out;
  uint64_t build_seed = 1;
  build->add_option("--n-zc", n_zc, "Prime Zadoff-Chu length");
  build->add_option("--roots", roots, "Comma-separated root list")
      ->delimiter(',');
  build->add_option("--shifts", shifts, "Cyclic shifts per root");
  build->add_option("--assoc", assoc, "Association scheme")
      ->check(CLI::IsMember({"random", "rs"}));
  build->add_option("--seed", build_seed, "Association seed");
  build->add_option("--out", build_out, "Output CSV path")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a detection model");
  std::string model = "proposed", stage = "all", preset = "desk", config;
  std::string cb_file, ctu_file, train_out;
  uint32_t train_n_zc = 7, n_d = 16, cells = 10;
  double threshold = 0.5;
  uint64_t train_seed = 1;
  bool force = false, freeze_uaen = false;
  uint32_t workers = 1;
  train->add_option("--model", model, "proposed | paudn | daudn")
      ->check(CLI::IsMember({"proposed", "paudn", "daudn", "proposed_daudn",
                             "conventional_daudn"}));
  train->add_option("--stage", stage, "pretrain | joint | all")
      ->check(CLI::IsMember({"pretrain", "joint", "all"}));
  train->add_option("--preset", preset, "paper | desk | micro")
      ->check(CLI::IsMember({"paper", "desk", "micro"}));
  train->add_option("--config", config, "key=value overrides file");
  train->add_option("--cb-file", cb_file, "Codebook file")->required();
  train->add_option("--ctu-file", ctu_file, "CTU map CSV")->required();
  train->add_option("--n-zc", train_n_zc, "Zadoff-Chu length of the map");
  train->add_option("--n-d", n_d, "Data symbols per frame");
  train->add_option("--cells", cells, "LSTM cell count");
  train->add_option("--threshold", threshold, "Decision threshold");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_flag("--force", force, "Allow joint stage without pretraining");
  train->add_flag("--freeze-uaen", freeze_uaen,
                  "Joint stage with frozen extraction network");
  train->add_option("--workers", workers, "Data-producer cap (1 = reproducible)");
  train->add_option("--out", train_out, "Output directory")->required();

  // eval sweep
  auto* eval = app.add_subcommand("eval", "Evaluate trained models");
  eval->require_subcommand(1);
  auto* sweep = eval->add_subcommand("sweep", "ADER sweep over SNR or N_a");
  std::string axis = "snr", points, sweep_cb, sweep_ctu, sweep_out;
  std::vector<std::string> models;
  double fixed_snr = 20.0;
  uint32_t fixed_na = 6, sweep_n_zc = 7;
  uint64_t frames = 10000, sweep_seed = 1;
  sweep->add_option("--axis", axis, "snr | na")
      ->check(CLI::IsMember({"snr", "na"}));
  sweep->add_option("--points", points, "a:b:step or comma list")->required();
  sweep->add_option("--snr", fixed_snr, "Fixed SNR (dB) for --axis na");
  sweep->add_option("--na", fixed_na, "Fixed N_a for --axis snr");
  sweep->add_option("--frames", frames, "Frames per point");
  sweep->add_option("--models", models, "Checkpoint paths")
      ->required()
      ->delimiter(',');
  sweep->add_option("--cb-file", sweep_cb, "Codebook file")->required();
  sweep->add_option("--ctu-file", sweep_ctu, "CTU map CSV")->required();
  sweep->add_option("--n-zc", sweep_n_zc, "Zadoff-Chu length of the map");
  sweep->add_option("--seed", sweep_seed, "Evaluation seed");
  sweep->add_option("--out", sweep_out, "Output CSV path")->required();

  // plot
  auto* plot = app.add_subcommand("plot", "Render a sweep CSV as SVG");
  std::string plot_in, plot_out;
  plot->add_option("--in", plot_in, "Sweep CSV")->required();
  plot->add_option("--out", plot_out, "SVG path")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "Run property suites");
  std::string suite = "all", verify_out;
  verify->add_option("--suite", suite, "zc | grad | sim | all");
  verify->add_option("--out", verify_out, "Optional report path");

  // rerun
  auto* rerun_cmd = app.add_subcommand("rerun", "Re-execute a manifest");
  std::string manifest;
  rerun_cmd->add_option("manifest", manifest, "Manifest JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  if (build->parsed()) {
    json o{{"n_zc", n_zc},   {"roots", roots}, {"shifts", shifts},
           {"assoc", assoc}, {"seed", build_seed},
           {"out", resolve_out(build_out)}};
    return finish(gfs_run_ctu_build(o.dump().c_str()));
  }
  if (train->parsed()) {
    json o{{"model", model},
           {"stage", stage},
           {"preset", preset},
           {"config", config},
           {"cb_file", cb_file},
           {"ctu_file", ctu_file},
           {"n_zc", train_n_zc},
           {"n_d", n_d},
           {"cells", cells},
           {"threshold", threshold},
           {"seed", train_seed},
           {"force", force},
           {"freeze_uaen", freeze_uaen},
           {"out", resolve_out(train_out)}};
    return finish(gfs_run_train(o.dump().c_str()));
  }
  if (sweep->parsed()) {
    json o{{"axis", axis},
           {"points", points},
           {"fixed_snr_db", fixed_snr},
           {"fixed_n_active", fixed_na},
           {"frames", frames},
           {"models", models},
           {"cb_file", sweep_cb},
           {"ctu_file", sweep_ctu},
           {"n_zc", sweep_n_zc},
           {"seed", sweep_seed},
           {"out", resolve_out(sweep_out)}};
    return finish(gfs_run_sweep(o.dump().c_str()));
  }
  if (plot->parsed())
    return finish(gfs_run_plot(plot_in.c_str(), resolve_out(plot_out).c_str()));
  if (verify->parsed()) {
    int failures = 0;
    int status = gfs_run_verify(
        suite.c_str(), verify_out.empty() ? nullptr : verify_out.c_str(),
        &failures);
    if (status == GFS_ERR_RUNTIME && failures > 0) {
      std::fprintf(stderr, "verify: %d check(s) failed\n", failures);
      return 1;
    }
    return finish(status);
  }
  if (rerun_cmd->parsed()) return finish(gfs_rerun(manifest.c_str()));
  return 2;
}
