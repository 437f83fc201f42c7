#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zc.hpp"

namespace gfs {

enum class AssocScheme { kRandom, kRootSeparated };

struct CtuEntry {
  uint32_t ctu_index = 0;
  uint32_t preamble_index = 0;
  uint32_t cb_index = 0;  // nu(n) = n mod J
};

struct CtuMap {
  std::vector<CtuEntry> entries;  // size N_R, ordered by ctu_index
  uint32_t J = 0;
  uint32_t L = 0;  // preambles per codebook
  AssocScheme scheme = AssocScheme::kRandom;

  uint32_t size() const { return static_cast<uint32_t>(entries.size()); }
  void validate() const;
};

uint32_t round_robin_cb(uint32_t n, uint32_t J);

CtuMap random_association(const PreambleSet& set, uint32_t J, uint64_t seed);

// Requires one root per codebook; codebook j gets every shift of roots[j].
CtuMap root_separated_association(const PreambleSet& set, uint32_t J);

struct CorrelationStats {
  double max = 0.0;
  double mean = 0.0;
};

// Cross-correlation statistics over unordered same-codebook preamble pairs.
CorrelationStats same_cb_correlation_stats(const CtuMap& map,
                                           const PreambleSet& set);

// When `meta_out` is non-null it receives the (root, shift) columns, indexed
// by preamble_index, so the preamble set can be reconstructed with
// rebuild_preambles.
CtuMap load_ctu_csv(const std::string& path, std::vector<PreambleMeta>* meta_out);

PreambleSet rebuild_preambles(const std::vector<PreambleMeta>& meta,
                              uint32_t n_zc);

void save_ctu_csv(const CtuMap& map, const PreambleSet& set,
                  const std::string& path);
CtuMap load_ctu_csv(const std::string& path);

}  // namespace gfs
