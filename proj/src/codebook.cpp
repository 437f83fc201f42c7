#include "codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace gfs {

namespace {

bool power_of_two(uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }

double squared_norm(const Codeword& cw) {
  double s = 0.0;
  for (const auto& e : cw.entries) s += std::norm(e);
  return s;
}

}  // namespace

void CodebookSet::validate() {
  if (codebooks.empty()) throw InvalidArgument("codebook set is empty");
  if (!power_of_two(M)) throw InvalidArgument("M must be a power of two");
  if (N == 0 || N >= K) throw InvalidArgument("need 0 < N < K");
  power_profile.assign(codebooks.size(), 0.0);
  double total = 0.0;
  for (size_t j = 0; j < codebooks.size(); ++j) {
    const Codebook& cb = codebooks[j];
    std::string where = "codebook " + std::to_string(j);
    if (cb.index != j) throw InvalidArgument(where + ": index mismatch");
    if (cb.resource_mask.size() != N)
      throw InvalidArgument(where + ": mask size != N");
    for (uint32_t r : cb.resource_mask)
      if (r >= K) throw InvalidArgument(where + ": mask index out of [0, K)");
    if (!std::is_sorted(cb.resource_mask.begin(), cb.resource_mask.end()) ||
        std::adjacent_find(cb.resource_mask.begin(), cb.resource_mask.end()) !=
            cb.resource_mask.end())
      throw InvalidArgument(where + ": mask must be sorted and distinct");
    if (cb.codewords.size() != M)
      throw InvalidArgument(where + ": expected " + std::to_string(M) +
                            " codewords");
    for (size_t m = 0; m < cb.codewords.size(); ++m) {
      const Codeword& cw = cb.codewords[m];
      std::string cw_where = where + ", codeword " + std::to_string(m);
      if (cw.entries.size() != K)
        throw InvalidArgument(cw_where + ": expected K entries");
      uint32_t nonzero = 0;
      for (uint32_t k = 0; k < K; ++k) {
        bool on_mask = std::binary_search(cb.resource_mask.begin(),
                                          cb.resource_mask.end(), k);
        bool is_zero = cw.entries[k] == cxd(0.0, 0.0);
        if (!is_zero) {
          ++nonzero;
          if (!on_mask)
            throw InvalidArgument(cw_where + ": nonzero entry off the mask at resource " +
                                  std::to_string(k));
        }
      }
      if (nonzero != N)
        throw InvalidArgument(cw_where + ": " + std::to_string(nonzero) +
                              " nonzero entries, expected " + std::to_string(N));
    }
    power_profile[j] = average_power(cb);
    total += power_profile[j];
  }
  if (total_power == 0.0) {
    total_power = total;
  } else if (std::abs(total - total_power) > 1e-9 * std::max(1.0, total_power)) {
    throw InvalidArgument("stored total power " + std::to_string(total_power) +
                          " disagrees with recomputed " + std::to_string(total));
  }
}

double average_power(const Codebook& cb) {
  if (cb.codewords.empty()) return 0.0;
  double s = 0.0;
  for (const auto& cw : cb.codewords) s += squared_norm(cw);
  return s / static_cast<double>(cb.codewords.size());
}

CodebookSet load_codebook_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open codebook file " + path);
  std::string line;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      // strip comments and blank lines
      auto pos = out.find('#');
      if (pos != std::string::npos) out.erase(pos);
      if (out.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line(line)) throw ParseError(path + ": empty codebook file");
  std::istringstream hdr(line);
  std::string tag, ver;
  uint32_t J = 0;
  CodebookSet cs;
  hdr >> tag >> ver >> J >> cs.K >> cs.N >> cs.M >> cs.total_power;
  if (!hdr || tag != "scma-cb" || ver != "v1")
    throw ParseError(path + ": bad header, expected 'scma-cb v1 J K N M total_power'");
  for (uint32_t j = 0; j < J; ++j) {
    if (!next_line(line))
      throw ParseError(path + ": missing 'cb' line for codebook " + std::to_string(j));
    std::istringstream cb_hdr(line);
    std::string cb_tag, mask_tag;
    Codebook cb;
    cb_hdr >> cb_tag >> cb.index >> mask_tag;
    if (!cb_hdr || cb_tag != "cb" || mask_tag != "mask")
      throw ParseError(path + ": bad codebook header for codebook " + std::to_string(j));
    for (uint32_t r = 0; r < cs.N; ++r) {
      uint32_t idx;
      if (!(cb_hdr >> idx))
        throw ParseError(path + ": codebook " + std::to_string(j) +
                         ": expected " + std::to_string(cs.N) + " mask indices");
      cb.resource_mask.push_back(idx);
    }
    for (uint32_t m = 0; m < cs.M; ++m) {
      if (!next_line(line))
        throw ParseError(path + ": codebook " + std::to_string(j) +
                         ": missing codeword line " + std::to_string(m));
      std::istringstream row(line);
      Codeword cw;
      for (uint32_t k = 0; k < cs.K; ++k) {
        double re, im;
        if (!(row >> re >> im))
          throw ParseError(path + ": codebook " + std::to_string(j) +
                           ", codeword " + std::to_string(m) +
                           ": expected " + std::to_string(2 * cs.K) + " values");
        cw.entries.emplace_back(re, im);
      }
      cb.codewords.push_back(std::move(cw));
    }
    cs.codebooks.push_back(std::move(cb));
  }
  cs.validate();
  return cs;
}

void save_codebook_set(const CodebookSet& cs, const std::string& path,
                       const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  if (!provenance.empty()) out << "# " << provenance << '\n';
  out << "scma-cb v1 " << cs.J() << ' ' << cs.K << ' ' << cs.N << ' ' << cs.M
      << ' ' << cs.total_power << '\n';
  for (const auto& cb : cs.codebooks) {
    out << "cb " << cb.index << " mask";
    for (uint32_t r : cb.resource_mask) out << ' ' << r;
    out << '\n';
    for (const auto& cw : cb.codewords) {
      for (uint32_t k = 0; k < cs.K; ++k) {
        if (k) out << ' ';
        out << cw.entries[k].real() << ' ' << cw.entries[k].imag();
      }
      out << '\n';
    }
  }
}

namespace {

CodebookSet scaled(const CodebookSet& cs, const std::vector<double>& factor) {
  CodebookSet out = cs;
  for (size_t j = 0; j < out.codebooks.size(); ++j)
    for (auto& cw : out.codebooks[j].codewords)
      for (auto& e : cw.entries) e *= factor[j];
  out.total_power = 0.0;  // recompute in validate
  out.validate();
  return out;
}

}  // namespace

CodebookSet normalize_total_power(const CodebookSet& cs, double p_target) {
  if (p_target <= 0.0) throw InvalidArgument("target power must be positive");
  double total = 0.0;
  for (const auto& cb : cs.codebooks) total += average_power(cb);
  if (total <= 0.0) throw InvalidArgument("cannot normalize a zero-power set");
  double f = std::sqrt(p_target / total);
  return scaled(cs, std::vector<double>(cs.codebooks.size(), f));
}

CodebookSet make_reference_pb_cb() {
  CodebookSet cs;
  cs.K = 4;
  cs.N = 2;
  cs.M = 4;
  const double a = std::sqrt(2.0 / 3.0), b = std::sqrt(1.0 / 3.0);
  const std::vector<std::pair<uint32_t, uint32_t>> masks = {
      {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  auto polar = [](double mag, double deg) {
    const double rad = deg * M_PI / 180.0;
    return cxd(mag * std::cos(rad), mag * std::sin(rad));
  };
  for (uint32_t j = 0; j < 6; ++j) {
    Codebook cb;
    cb.index = j;
    cb.resource_mask = {masks[j].first, masks[j].second};
    // Two amplitude rings; the ring swaps between codeword halves so each
    // resource carries both strong and weak entries.
    const std::vector<std::pair<cxd, cxd>> points = {
        {polar(a, 0), polar(b, 45)},
        {polar(a, 90), polar(b, 135)},
        {polar(b, 0), polar(a, 225)},
        {polar(b, 90), polar(a, 315)},
    };
    for (const auto& [first, second] : points) {
      Codeword cw;
      cw.entries.assign(4, cxd(0.0, 0.0));
      cw.entries[masks[j].first] = first;
      cw.entries[masks[j].second] = second;
      cb.codewords.push_back(std::move(cw));
    }
    cs.codebooks.push_back(std::move(cb));
  }
  cs.validate();
  return cs;
}

CodebookSet make_reference_pi_cb(double ratio) {
  CodebookSet pb = make_reference_pb_cb();
  std::vector<double> profile;
  double p = 1.0;
  for (uint32_t j = 0; j < pb.J(); ++j, p *= ratio) profile.push_back(p);
  return make_power_imbalanced(pb, profile);
}

CodebookSet make_power_imbalanced(const CodebookSet& cs,
                                  const std::vector<double>& profile) {
  if (profile.size() != cs.codebooks.size())
    throw InvalidArgument("profile size must equal J");
  double profile_sum = 0.0;
  for (double p : profile) {
    if (p <= 0.0) throw InvalidArgument("profile entries must be positive");
    profile_sum += p;
  }
  double total = 0.0;
  for (const auto& cb : cs.codebooks) total += average_power(cb);
  if (total <= 0.0) throw InvalidArgument("cannot rescale a zero-power set");
  std::vector<double> factor(profile.size());
  for (size_t j = 0; j < profile.size(); ++j) {
    double target_pj = total * profile[j] / profile_sum;
    double current_pj = average_power(cs.codebooks[j]);
    if (current_pj <= 0.0)
      throw InvalidArgument("codebook " + std::to_string(j) + " has zero power");
    factor[j] = std::sqrt(target_pj / current_pj);
  }
  return scaled(cs, factor);
}

const Codeword& encode_block(const std::vector<uint8_t>& bits,
                             const Codebook& cb) {
  const size_t M = cb.codewords.size();
  size_t want = 0;
  for (size_t m = M; m > 1; m >>= 1) ++want;
  if (bits.size() != want)
    throw InvalidArgument("expected " + std::to_string(want) + " bits, got " +
                          std::to_string(bits.size()));
  size_t idx = 0;  // big-endian
  for (uint8_t b : bits) {
    if (b > 1) throw InvalidArgument("bits must be 0 or 1");
    idx = (idx << 1) | b;
  }
  return cb.codewords[idx];
}

double min_cross_distance(const Codebook& a, const Codebook& b) {
  if (a.codewords.empty() || b.codewords.empty())
    throw InvalidArgument("empty codebook");
  const size_t K = a.codewords[0].entries.size();
  if (K != b.codewords[0].entries.size())
    throw InvalidArgument("min_cross_distance: dimension mismatch");
  bool same = &a == &b;
  if (!same && a.codewords.size() == b.codewords.size()) {
    same = true;
    for (size_t m = 0; same && m < a.codewords.size(); ++m)
      same = a.codewords[m].entries == b.codewords[m].entries;
  }
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < a.codewords.size(); ++i) {
    for (size_t j = 0; j < b.codewords.size(); ++j) {
      if (same && i == j) continue;
      double d2 = 0.0;
      for (size_t k = 0; k < K; ++k)
        d2 += std::norm(a.codewords[i].entries[k] - b.codewords[j].entries[k]);
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

}  // namespace gfs
