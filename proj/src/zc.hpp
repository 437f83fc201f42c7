#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace gfs {

using cvec = std::vector<std::complex<double>>;

bool is_prime(uint32_t n);

struct ZcParams {
  uint32_t n_zc = 0;               // prime sequence length
  std::vector<uint32_t> roots;     // distinct, in [1, n_zc-1]

  void validate() const;
};

struct PreambleMeta {
  uint32_t root = 0;
  uint32_t shift = 0;
};

// Unit-energy preambles, root-major order (all shifts of roots[0] first).
struct PreambleSet {
  uint32_t n_zc = 0;
  std::vector<cvec> preambles;
  std::vector<PreambleMeta> meta;

  size_t size() const { return preambles.size(); }
};

// Unnormalized root sequence, entry k (1-based in the formula) at index k-1:
// exp(-i*pi*u*k*(k+1)/n_zc).
cvec zc_root_sequence(uint32_t u, uint32_t n_zc);

// out[k] = in[(k+s) mod n], 0 <= s < n.
cvec cyclic_shift(const cvec& seq, uint32_t s);

PreambleSet build_preamble_set(const ZcParams& params, uint32_t shifts_per_root);

// |<a, b>| with conjugation on b; inputs must be unit-energy and equal length.
double cross_correlation(const cvec& a, const cvec& b);

std::vector<std::vector<double>> correlation_matrix(const PreambleSet& set);

void export_correlation_csv(const PreambleSet& set, const std::string& path);

}  // namespace gfs
