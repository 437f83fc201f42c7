#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codebook.hpp"
#include "ctu.hpp"
#include "rng.hpp"
#include "zc.hpp"

namespace gfs {

enum class ActivityMode { kFixedCount, kBernoulli };

struct SimConfig {
  uint32_t n_r = 0, J = 0, K = 0, N = 0, M = 0;
  uint32_t n_d = 16;
  uint32_t n_zc = 0;
  double snr_db = 20.0;
  ActivityMode activity_mode = ActivityMode::kFixedCount;
  uint32_t n_active_min = 1, n_active_max = 6;  // fixed-count: uniform in range
  double bernoulli_p = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

using ActivityVector = std::vector<uint8_t>;  // N_R entries in {0,1}

struct ReceivedFrame {
  cvec y_p;                 // length N_ZC
  std::vector<cvec> y_d;    // N_d frames of length K
  ActivityVector truth;     // delta
  cvec h;                   // N_R channel coefficients
  std::vector<uint8_t> bits;  // N_R * N_d * log2(M), row-major by user
};

struct TransmissionBatch {
  std::vector<ReceivedFrame> frames;
  // Realified network inputs, feature-major per frame.
  std::vector<std::vector<float>> y_p_real;   // 2*N_ZC per frame
  std::vector<std::vector<float>> y_d_real;   // N_d*2K per frame, symbol-major
  std::vector<std::vector<float>> labels;     // N_R per frame
};

// sigma^2 = 10^(-snr_db/10) under the unit-power convention (unit-energy
// preambles, P_j = 1, E[|h|^2] = 1).
double snr_to_sigma(double snr_db);

ActivityVector draw_activity(const SimConfig& cfg, Rng& rng);

cvec draw_channel(uint32_t n_r, Rng& rng);

cvec synthesize_preamble_rx(const ActivityVector& delta, const cvec& h,
                            const CtuMap& map, const PreambleSet& set,
                            double sigma, Rng& rng);

std::vector<cvec> synthesize_data_rx(const ActivityVector& delta, const cvec& h,
                                     const CtuMap& map, const CodebookSet& cbs,
                                     const std::vector<uint8_t>& bits,
                                     uint32_t n_d, double sigma, Rng& rng);

// [Re(v); Im(v)]
std::vector<float> realify(const cvec& v);

TransmissionBatch generate_batch(const SimConfig& cfg, const CtuMap& map,
                                 const PreambleSet& set, const CodebookSet& cbs,
                                 uint32_t batch_size, Rng& rng);

// Binary shard: magic "GFSB1", config fields, then per frame delta bitmap,
// h, y_p and y_d as little-endian 32-bit floats.
void save_shard(const TransmissionBatch& batch, const SimConfig& cfg,
                const std::string& path);
TransmissionBatch load_shard(const std::string& path, SimConfig& cfg_out);

}  // namespace gfs
