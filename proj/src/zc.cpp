#include "zc.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "errors.hpp"

namespace gfs {

bool is_prime(uint32_t n) {
  if (n < 2) return false;
  for (uint32_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

void ZcParams::validate() const {
  if (!is_prime(n_zc))
    throw InvalidArgument("n_zc must be prime, got " + std::to_string(n_zc));
  if (roots.empty()) throw InvalidArgument("at least one root required");
  std::vector<bool> seen(n_zc, false);
  for (uint32_t u : roots) {
    if (u < 1 || u >= n_zc)
      throw InvalidArgument("root " + std::to_string(u) + " out of [1, " +
                            std::to_string(n_zc - 1) + "]");
    if (seen[u]) throw InvalidArgument("duplicate root " + std::to_string(u));
    seen[u] = true;
  }
}

cvec zc_root_sequence(uint32_t u, uint32_t n_zc) {
  if (!is_prime(n_zc))
    throw InvalidArgument("n_zc must be prime, got " + std::to_string(n_zc));
  if (u < 1 || u >= n_zc)
    throw InvalidArgument("root " + std::to_string(u) + " out of range");
  cvec out(n_zc);
  for (uint32_t idx = 0; idx < n_zc; ++idx) {
    uint64_t k = idx + 1;  // the formula indexes k = 1..n_zc
    // Reduce the phase integer mod 2*n_zc before the float divide.
    uint64_t q = (static_cast<uint64_t>(u) * k % (2 * n_zc)) * ((k + 1) % (2 * n_zc)) % (2 * n_zc);
    double phase = -M_PI * static_cast<double>(q) / n_zc;
    out[idx] = {std::cos(phase), std::sin(phase)};
  }
  return out;
}

cvec cyclic_shift(const cvec& seq, uint32_t s) {
  const size_t n = seq.size();
  if (s >= n)
    throw InvalidArgument("cyclic shift " + std::to_string(s) +
                          " out of [0, " + std::to_string(n) + ")");
  cvec out(n);
  for (size_t k = 0; k < n; ++k) out[k] = seq[(k + s) % n];
  return out;
}

PreambleSet build_preamble_set(const ZcParams& params, uint32_t shifts_per_root) {
  params.validate();
  if (shifts_per_root == 0 || shifts_per_root > params.n_zc)
    throw InvalidArgument("shifts_per_root must be in [1, n_zc]");
  PreambleSet set;
  set.n_zc = params.n_zc;
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.n_zc));
  for (uint32_t u : params.roots) {
    cvec base = zc_root_sequence(u, params.n_zc);
    for (uint32_t s = 0; s < shifts_per_root; ++s) {
      cvec p = cyclic_shift(base, s);
      for (auto& x : p) x *= scale;
      set.preambles.push_back(std::move(p));
      set.meta.push_back({u, s});
    }
  }
  return set;
}

double cross_correlation(const cvec& a, const cvec& b) {
  if (a.size() != b.size())
    throw InvalidArgument("cross_correlation: length mismatch");
  std::complex<double> acc = 0.0;
  for (size_t k = 0; k < a.size(); ++k) acc += a[k] * std::conj(b[k]);
  return std::abs(acc);
}

std::vector<std::vector<double>> correlation_matrix(const PreambleSet& set) {
  const size_t n = set.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    m[i][i] = 1.0;
    for (size_t j = 0; j < i; ++j) {
      double c = cross_correlation(set.preambles[i], set.preambles[j]);
      m[i][j] = c;
      m[j][i] = c;
    }
  }
  return m;
}

void export_correlation_csv(const PreambleSet& set, const std::string& path) {
  auto m = correlation_matrix(set);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(9);
  for (const auto& row : m) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
}

}  // namespace gfs
