#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gfs {

struct CtuBuildOptions {
  uint32_t n_zc = 7;
  std::vector<uint32_t> roots = {1, 2, 3, 4, 5, 6};
  uint32_t shifts = 7;
  std::string assoc = "random";  // random | rs
  uint64_t seed = 1;
  std::string out;  // CTU CSV path
};

struct TrainOptions {
  std::string model = "proposed";  // proposed | paudn | daudn
  std::string stage = "all";       // pretrain | joint | all
  std::string preset = "desk";     // paper | desk | micro
  std::string config;              // optional key=value overrides
  std::string cb_file;
  std::string ctu_file;
  uint32_t n_zc = 7;
  uint32_t n_d = 16;
  uint32_t cells = 10;
  double threshold = 0.5;
  uint64_t seed = 1;
  bool force = false;        // allow joint without a pretrain checkpoint
  bool freeze_uaen = false;  // joint stage with UAEN parameters frozen
  std::string out;           // output directory
};

struct SweepOptions {
  std::string axis = "snr";  // snr | na
  std::string points;        // "a:b:step" or comma list
  double fixed_snr_db = 20.0;
  uint32_t fixed_n_active = 6;
  uint64_t frames = 10000;
  std::vector<std::string> models;  // checkpoint paths; labels from stems
  std::string cb_file;
  std::string ctu_file;
  uint32_t n_zc = 7;
  uint64_t seed = 1;
  std::string out;  // sweep CSV path
};

struct PlotOptions {
  std::string in;   // sweep CSV
  std::string out;  // SVG path
};

struct VerifyOptions {
  std::string suite = "all";
  std::string out;  // optional report path
};

struct ManifestOutput {
  std::string path;
  uint32_t crc32 = 0;
  uint64_t bytes = 0;
};

struct RunManifest {
  std::string command;  // ctu-build | train | sweep | plot | verify
  std::string options_json;
  uint64_t seed = 0;
  std::vector<ManifestOutput> outputs;
  std::string created_utc;
  std::string path;  // where the manifest itself was written
};

uint32_t file_crc32(const std::string& path);

RunManifest run_ctu_build(const CtuBuildOptions& opt);
RunManifest run_train(const TrainOptions& opt);
RunManifest run_sweep(const SweepOptions& opt);
RunManifest run_plot(const PlotOptions& opt);
// Returns the manifest; `failures` receives the failed-check count.
RunManifest run_verify(const VerifyOptions& opt, int& failures);

// Options from a JSON object string; missing keys take the struct defaults.
// The schema matches the "options" object recorded in manifests.
CtuBuildOptions parse_ctu_build_options(const std::string& json_text);
TrainOptions parse_train_options(const std::string& json_text);
SweepOptions parse_sweep_options(const std::string& json_text);

// Re-executes the command recorded in a manifest file and checks that every
// recorded output is reproduced bit-identically (by size and CRC32). Throws
// on any mismatch; returns the fresh manifest.
RunManifest rerun(const std::string& manifest_path);

}  // namespace gfs
