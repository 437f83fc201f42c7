#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace gfs {

using cxd = std::complex<double>;

struct Codeword {
  std::vector<cxd> entries;  // length K, exactly N nonzero
};

struct Codebook {
  uint32_t index = 0;
  std::vector<uint32_t> resource_mask;  // N sorted resource indices in [0, K)
  std::vector<Codeword> codewords;      // M codewords sharing the mask
};

struct CodebookSet {
  uint32_t K = 0, N = 0, M = 0;
  std::vector<Codebook> codebooks;      // size J
  std::vector<double> power_profile;    // P_j, recomputed on validate
  double total_power = 0.0;

  uint32_t J() const { return static_cast<uint32_t>(codebooks.size()); }

  // Recomputes the power profile from entries and checks all invariants
  // (sparsity, masks, dimensions, power bookkeeping within 1e-9 relative).
  void validate();
};

// Built-in power-balanced K=4, J=6, N=2, M=4 set: the C(4,2) resource masks
// with two-ring QPSK-like codewords, P_j = 1 for every codebook.
CodebookSet make_reference_pb_cb();

// PI variant of the reference set: geometric power profile ratio^j across
// codebooks, total power preserved.
CodebookSet make_reference_pi_cb(double ratio = 1.4);

CodebookSet load_codebook_set(const std::string& path);
void save_codebook_set(const CodebookSet& cs, const std::string& path,
                       const std::string& provenance = "");

// (1/M) * sum_m ||c_m||^2
double average_power(const Codebook& cb);

CodebookSet normalize_total_power(const CodebookSet& cs, double p_target);

// Rescales codebook j so P_j is proportional to profile[j]; total power kept.
CodebookSet make_power_imbalanced(const CodebookSet& cs,
                                  const std::vector<double>& profile);

// Codeword at the big-endian index of `bits` (bits.size() == log2(M)).
const Codeword& encode_block(const std::vector<uint8_t>& bits,
                             const Codebook& cb);

// Min Euclidean distance over codeword pairs; for a == b (same object or
// equal content) the min is over distinct index pairs.
double min_cross_distance(const Codebook& a, const Codebook& b);

}  // namespace gfs
