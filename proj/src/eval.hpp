#pragma once

#include <string>
#include <vector>

#include "models.hpp"
#include "sim.hpp"

namespace gfs {

struct AderReport {
  std::string model;
  double snr_db = 0.0;
  uint32_t n_active = 0;
  uint64_t frames = 0;
  double ader = 0.0;
  double miss_rate = 0.0;         // misses / (N_R * frames)
  double false_alarm_rate = 0.0;  // false alarms / (N_R * frames)
  double stderr_binomial = 0.0;   // sqrt(a(1-a)/(frames*N_R))
  uint64_t seed = 0;
};

// Normalized Hamming error between truth and decision for one frame.
double ader(const std::vector<uint8_t>& truth, const std::vector<uint8_t>& decision);

// Correlation-threshold sanity baseline: active iff |<p_n, y_p>| > gamma_c.
std::vector<uint8_t> oracle_correlator(const cvec& y_p, const PreambleSet& set,
                                       double gamma_c);

struct SweepPoint {
  double snr_db = 20.0;
  uint32_t n_active = 6;
};

struct SweepSpec {
  std::vector<SweepPoint> points;
  uint64_t frames_per_point = 10000;
  uint64_t seed = 1;
};

// Batched inference of one model over fresh seeded frames per point.
// Points are evaluated with disjoint evaluation-domain substreams.
std::vector<AderReport> sweep_model(ModelBundle<float>& bundle,
                                    const SweepSpec& spec, const CtuMap& map,
                                    const PreambleSet& set,
                                    const CodebookSet& cbs,
                                    uint32_t inference_batch = 1000);

void write_sweep_csv(const std::vector<AderReport>& reports,
                     const std::string& path);
std::vector<AderReport> read_sweep_csv(const std::string& path);

// Deterministic SVG line chart (one series per model, log-scale ADER axis).
void emit_plot(const std::string& csv_path, const std::string& svg_path);

// Spearman rank correlation and whether it is significantly positive at the
// given one-sided level (t-approximation).
struct SpearmanResult {
  double rho = 0.0;
  double p_one_sided = 1.0;
};
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gfs
