#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "codebook.hpp"
#include "errors.hpp"

using namespace gfs;

namespace {

const std::string kPbFile = std::string(TEST_DATA_DIR) + "/pb_cb_k4_j6.txt";
const std::string kPiFile = std::string(TEST_DATA_DIR) + "/pi_cb_k4_j6.txt";

size_t nonzeros(const Codeword& cw) {
  size_t n = 0;
  for (const auto& e : cw.entries)
    if (e != cxd(0.0, 0.0)) ++n;
  return n;
}

// Brute-force min Euclidean distance over all codeword pairs.
double brute_min_distance(const Codebook& a, const Codebook& b) {
  double best = 1e300;
  const bool same = &a == &b || (a.resource_mask == b.resource_mask &&
                                 a.codewords.size() == b.codewords.size());
  for (size_t i = 0; i < a.codewords.size(); ++i) {
    for (size_t j = 0; j < b.codewords.size(); ++j) {
      bool equal = true;
      for (size_t k = 0; k < a.codewords[i].entries.size(); ++k)
        if (a.codewords[i].entries[k] != b.codewords[j].entries[k])
          equal = false;
      if (same && i == j && equal) continue;
      double d2 = 0.0;
      for (size_t k = 0; k < a.codewords[i].entries.size(); ++k)
        d2 += std::norm(a.codewords[i].entries[k] - b.codewords[j].entries[k]);
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("shipped PB file loads with the documented shape") {
  CodebookSet cs = load_codebook_set(kPbFile);
  CHECK(cs.J() == 6);
  CHECK(cs.K == 4);
  CHECK(cs.N == 2);
  CHECK(cs.M == 4);
  CHECK(cs.total_power == doctest::Approx(6.0).epsilon(1e-9));
  for (const auto& cb : cs.codebooks) {
    for (const auto& cw : cb.codewords) CHECK(nonzeros(cw) == 2);
    CHECK(average_power(cb) == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Masks are the full C(4,2) family, pairwise distinct.
  for (size_t i = 0; i < cs.codebooks.size(); ++i)
    for (size_t j = 0; j < i; ++j)
      CHECK(cs.codebooks[i].resource_mask != cs.codebooks[j].resource_mask);
}

TEST_CASE("sparsity violation names the offending codeword") {
  CodebookSet cs = make_reference_pb_cb();
  cs.codebooks[2].codewords[1].entries[1] = cxd(0.1, 0.0);  // off-mask entry
  try {
    cs.validate();
    FAIL("validate accepted an invalid set");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("codebook 2") != std::string::npos);
    CHECK(msg.find("codeword 1") != std::string::npos);
  }
  const std::string path = "bad_cb_test.txt";
  // Also via file: hand-write a 3-nonzero row.
  {
    std::ofstream out(path);
    out << "scma-cb v1 1 4 2 2 1\ncb 0 mask 0 1\n"
        << "1 0 1 0 1 0 0 0\n0 1 0 1 0 0 0 0\n";
  }
  CHECK_THROWS(load_codebook_set(path));
  std::remove(path.c_str());
}

TEST_CASE("empty file is a parse failure") {
  const std::string path = "empty_cb_test.txt";
  { std::ofstream out(path); }
  CHECK_THROWS_AS(load_codebook_set(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("average power basics") {
  Codebook cb;
  cb.resource_mask = {0, 1};
  for (int m = 0; m < 4; ++m) {
    Codeword cw;
    cw.entries = {cxd(1.0, 0.0), cxd(0.0, 0.0)};
    cb.codewords.push_back(cw);
  }
  CHECK(average_power(cb) == doctest::Approx(1.0));
  for (auto& cw : cb.codewords) cw.entries = {cxd(0, 0), cxd(0, 0)};
  CHECK(average_power(cb) == doctest::Approx(0.0));
}

TEST_CASE("normalize_total_power scales globally") {
  CodebookSet pb = make_reference_pb_cb();
  CodebookSet doubled = normalize_total_power(pb, 12.0);
  CodebookSet back = normalize_total_power(doubled, 6.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (uint32_t j = 0; j < 6; ++j) {
    for (uint32_t m = 0; m < 4; ++m) {
      for (uint32_t k = 0; k < 4; ++k) {
        cxd orig = pb.codebooks[j].codewords[m].entries[k];
        cxd up = doubled.codebooks[j].codewords[m].entries[k];
        cxd rt = back.codebooks[j].codewords[m].entries[k];
        CHECK(std::abs(up * inv_sqrt2 - orig) < 1e-12);
        CHECK(std::abs(rt - orig) < 1e-12);  // idempotent round trip
      }
    }
  }
  CHECK_THROWS_AS(normalize_total_power(pb, 0.0), InvalidArgument);
}

TEST_CASE("normalization preserves power ratios") {
  CodebookSet pi = make_reference_pi_cb(2.0);
  CodebookSet scaled = normalize_total_power(pi, 3.0);
  double r0 = average_power(pi.codebooks[1]) / average_power(pi.codebooks[0]);
  double r1 =
      average_power(scaled.codebooks[1]) / average_power(scaled.codebooks[0]);
  CHECK(r0 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r1 == doctest::Approx(r0).epsilon(1e-12));
}

TEST_CASE("make_power_imbalanced follows the profile") {
  CodebookSet pb = make_reference_pb_cb();
  CodebookSet same = make_power_imbalanced(pb, {1, 1, 1, 1, 1, 1});
  for (uint32_t j = 0; j < 6; ++j)
    CHECK(average_power(same.codebooks[j]) ==
          doctest::Approx(1.0).epsilon(1e-9));
  CodebookSet ramp = make_power_imbalanced(pb, {1, 2, 3, 4, 5, 6});
  for (uint32_t j = 0; j < 6; ++j)
    CHECK(average_power(ramp.codebooks[j]) ==
          doctest::Approx(6.0 * (j + 1) / 21.0).epsilon(1e-9));
  CHECK_THROWS_AS(make_power_imbalanced(pb, {1, 2, 3, 4, 5, 0}),
                  InvalidArgument);
}

TEST_CASE("encode_block uses big-endian bit order") {
  CodebookSet cs = make_reference_pb_cb();
  const Codebook& cb = cs.codebooks[0];
  CHECK(&encode_block({0, 0}, cb) == &cb.codewords[0]);
  CHECK(&encode_block({1, 1}, cb) == &cb.codewords[3]);
  CHECK(&encode_block({1, 0}, cb) == &cb.codewords[2]);
  CHECK_THROWS_AS(encode_block({1}, cb), InvalidArgument);
  CHECK_THROWS_AS(encode_block({0, 2}, cb), InvalidArgument);
}

TEST_CASE("min_cross_distance matches brute force") {
  CodebookSet pb = load_codebook_set(kPbFile);
  for (uint32_t a = 0; a < 6; ++a)
    for (uint32_t b = 0; b < 6; ++b)
      CHECK(min_cross_distance(pb.codebooks[a], pb.codebooks[b]) ==
            doctest::Approx(brute_min_distance(pb.codebooks[a],
                                               pb.codebooks[b]))
                .epsilon(1e-12));
}

TEST_CASE("PI high-power pair separates at least as well as PB") {
  // Power scaling shrinks low-power codebooks and grows high-power ones;
  // the comparison is on the designated high-power same-index pair (4, 5).
  CodebookSet pb = load_codebook_set(kPbFile);
  CodebookSet pi = load_codebook_set(kPiFile);
  double d_pb = min_cross_distance(pb.codebooks[4], pb.codebooks[5]);
  double d_pi = min_cross_distance(pi.codebooks[4], pi.codebooks[5]);
  CHECK(d_pi >= d_pb - 1e-12);
}

TEST_CASE("save then load round-trips exactly") {
  CodebookSet pi = load_codebook_set(kPiFile);
  const std::string path = "roundtrip_cb_test.txt";
  save_codebook_set(pi, path);
  CodebookSet again = load_codebook_set(path);
  for (uint32_t j = 0; j < 6; ++j)
    for (uint32_t m = 0; m < 4; ++m)
      CHECK(again.codebooks[j].codewords[m].entries ==
            pi.codebooks[j].codewords[m].entries);
  std::remove(path.c_str());
}
