#include "ctu.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "errors.hpp"
#include "rng.hpp"

namespace gfs {

uint32_t round_robin_cb(uint32_t n, uint32_t J) {
  if (J == 0) throw InvalidArgument("J must be positive");
  return n % J;
}

void CtuMap::validate() const {
  const uint32_t n_r = size();
  if (n_r == 0 || J == 0 || n_r != J * L)
    throw InvalidArgument("CtuMap: N_R must equal J*L");
  std::vector<bool> seen(n_r, false);
  std::vector<uint32_t> per_cb(J, 0);
  for (uint32_t n = 0; n < n_r; ++n) {
    const CtuEntry& e = entries[n];
    if (e.ctu_index != n) throw InvalidArgument("CtuMap: entries out of order");
    if (e.preamble_index >= n_r || seen[e.preamble_index])
      throw InvalidArgument("CtuMap: preamble indices must be a permutation");
    seen[e.preamble_index] = true;
    if (e.cb_index != round_robin_cb(n, J))
      throw InvalidArgument("CtuMap: cb_index must be n mod J");
    ++per_cb[e.cb_index];
  }
  for (uint32_t c : per_cb)
    if (c != L) throw InvalidArgument("CtuMap: each codebook needs exactly L preambles");
}

namespace {

CtuMap from_permutation(const std::vector<uint32_t>& perm, uint32_t J,
                        AssocScheme scheme) {
  CtuMap map;
  map.J = J;
  map.L = static_cast<uint32_t>(perm.size()) / J;
  map.scheme = scheme;
  for (uint32_t n = 0; n < perm.size(); ++n)
    map.entries.push_back({n, perm[n], round_robin_cb(n, J)});
  map.validate();
  return map;
}

}  // namespace

CtuMap random_association(const PreambleSet& set, uint32_t J, uint64_t seed) {
  const uint32_t n_r = static_cast<uint32_t>(set.size());
  if (J == 0 || n_r % J != 0)
    throw InvalidArgument("N_R=" + std::to_string(n_r) +
                          " not divisible by J=" + std::to_string(J));
  std::vector<uint32_t> perm(n_r);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, stream_domain::kAssoc);
  for (uint32_t i = n_r - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(i + 1)]);
  return from_permutation(perm, J, AssocScheme::kRandom);
}

CtuMap root_separated_association(const PreambleSet& set, uint32_t J) {
  const uint32_t n_r = static_cast<uint32_t>(set.size());
  if (J == 0 || n_r % J != 0)
    throw InvalidArgument("N_R not divisible by J");
  const uint32_t L = n_r / J;
  // Root-major set layout: preamble r*L + s is shift s of root index r.
  std::vector<uint32_t> roots;
  for (const auto& m : set.meta)
    if (roots.empty() || roots.back() != m.root) roots.push_back(m.root);
  if (roots.size() != J)
    throw InvalidArgument("root-separated association needs exactly J roots, got " +
                          std::to_string(roots.size()));
  // CTU n -> codebook j = n mod J gets the (n/J)-th shift of root j.
  std::vector<uint32_t> perm(n_r);
  for (uint32_t n = 0; n < n_r; ++n) {
    uint32_t j = n % J;
    uint32_t s = n / J;
    perm[n] = j * L + s;
  }
  return from_permutation(perm, J, AssocScheme::kRootSeparated);
}

CorrelationStats same_cb_correlation_stats(const CtuMap& map,
                                           const PreambleSet& set) {
  if (map.size() != set.size())
    throw InvalidArgument("CtuMap and PreambleSet sizes disagree");
  CorrelationStats stats;
  double sum = 0.0;
  size_t pairs = 0;
  for (uint32_t a = 0; a < map.size(); ++a) {
    for (uint32_t b = a + 1; b < map.size(); ++b) {
      if (map.entries[a].cb_index != map.entries[b].cb_index) continue;
      double c = cross_correlation(set.preambles[map.entries[a].preamble_index],
                                   set.preambles[map.entries[b].preamble_index]);
      stats.max = std::max(stats.max, c);
      sum += c;
      ++pairs;
    }
  }
  stats.mean = pairs ? sum / static_cast<double>(pairs) : 0.0;
  return stats;
}

void save_ctu_csv(const CtuMap& map, const PreambleSet& set,
                  const std::string& path) {
  if (map.size() != set.size())
    throw InvalidArgument("CtuMap and PreambleSet sizes disagree");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "ctu_index,preamble_index,root,shift,cb_index\n";
  for (const auto& e : map.entries) {
    const PreambleMeta& m = set.meta[e.preamble_index];
    out << e.ctu_index << ',' << e.preamble_index << ',' << m.root << ','
        << m.shift << ',' << e.cb_index << '\n';
  }
}

CtuMap load_ctu_csv(const std::string& path,
                    std::vector<PreambleMeta>* meta_out) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CTU file " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("ctu_index,preamble_index", 0) != 0)
    throw ParseError(path + ": missing CTU CSV header");
  CtuMap map;
  uint32_t max_cb = 0;
  std::vector<PreambleMeta> metas;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    CtuEntry e;
    uint32_t root, shift;
    char c1, c2, c3, c4;
    if (!(row >> e.ctu_index >> c1 >> e.preamble_index >> c2 >> root >> c3 >>
          shift >> c4 >> e.cb_index) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw ParseError(path + ": malformed CTU row '" + line + "'");
    max_cb = std::max(max_cb, e.cb_index);
    if (e.preamble_index >= metas.size()) metas.resize(e.preamble_index + 1);
    metas[e.preamble_index] = {root, shift};
    map.entries.push_back(e);
  }
  if (map.entries.empty()) throw ParseError(path + ": no CTU rows");
  map.J = max_cb + 1;
  map.L = map.size() / map.J;
  map.validate();
  if (meta_out) *meta_out = std::move(metas);
  return map;
}

CtuMap load_ctu_csv(const std::string& path) {
  return load_ctu_csv(path, nullptr);
}

PreambleSet rebuild_preambles(const std::vector<PreambleMeta>& meta,
                              uint32_t n_zc) {
  ZcParams params;
  params.n_zc = n_zc;
  uint32_t shifts = 0;
  for (const auto& m : meta) {
    if (std::find(params.roots.begin(), params.roots.end(), m.root) ==
        params.roots.end())
      params.roots.push_back(m.root);
    shifts = std::max(shifts, m.shift + 1);
  }
  PreambleSet set = build_preamble_set(params, shifts);
  if (set.size() != meta.size())
    throw InvalidArgument("CTU metadata is not a full root x shift grid");
  for (size_t i = 0; i < meta.size(); ++i)
    if (set.meta[i].root != meta[i].root || set.meta[i].shift != meta[i].shift)
      throw InvalidArgument("CTU metadata ordering is not root-major");
  return set;
}

}  // namespace gfs
