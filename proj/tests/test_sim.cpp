#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>

#include "codebook.hpp"
#include "ctu.hpp"
#include "errors.hpp"
#include "sim.hpp"
#include "zc.hpp"

using namespace gfs;

namespace {

struct World {
  PreambleSet set;
  CtuMap map;
  CodebookSet cbs;
};

World world_42() {
  World w;
  ZcParams p;
  p.n_zc = 7;
  p.roots = {1, 2, 3, 4, 5, 6};
  w.set = build_preamble_set(p, 7);
  w.map = random_association(w.set, 6, 3);
  w.cbs = make_reference_pb_cb();
  return w;
}

SimConfig config_42(double snr_db) {
  SimConfig cfg;
  cfg.n_r = 42;
  cfg.J = 6;
  cfg.K = 4;
  cfg.N = 2;
  cfg.M = 4;
  cfg.n_d = 16;
  cfg.n_zc = 7;
  cfg.snr_db = snr_db;
  cfg.n_active_min = 1;
  cfg.n_active_max = 6;
  return cfg;
}

}  // namespace

TEST_CASE("fixed-count activity draws exactly N_a users") {
  SimConfig cfg = config_42(20.0);
  cfg.n_active_min = cfg.n_active_max = 6;
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    ActivityVector d = draw_activity(cfg, rng);
    CHECK(std::accumulate(d.begin(), d.end(), 0) == 6);
  }
  cfg.n_active_min = 1;
  cfg.n_active_max = 6;
  for (int t = 0; t < 100; ++t) {
    ActivityVector d = draw_activity(cfg, rng);
    int na = std::accumulate(d.begin(), d.end(), 0);
    CHECK(na >= 1);
    CHECK(na <= 6);
  }
}

TEST_CASE("bernoulli activity statistics") {
  SimConfig cfg = config_42(20.0);
  cfg.activity_mode = ActivityMode::kBernoulli;
  cfg.bernoulli_p = 0.0;
  Rng rng(2);
  ActivityVector zero = draw_activity(cfg, rng);
  CHECK(std::accumulate(zero.begin(), zero.end(), 0) == 0);
  cfg.bernoulli_p = 0.1;
  const int trials = 100000;
  long total = 0;
  for (int t = 0; t < trials; ++t) {
    ActivityVector d = draw_activity(cfg, rng);
    total += std::accumulate(d.begin(), d.end(), 0);
  }
  double mean = static_cast<double>(total) / trials;
  // Binomial(42, 0.1): mean 4.2, per-draw sd sqrt(42*0.09).
  double sigma = std::sqrt(42 * 0.1 * 0.9 / trials);
  CHECK(std::abs(mean - 4.2) < 3 * sigma);
}

TEST_CASE("activity count cannot exceed N_R") {
  SimConfig cfg = config_42(20.0);
  cfg.n_active_min = 43;
  cfg.n_active_max = 43;
  Rng rng(3);
  CHECK_THROWS_AS(draw_activity(cfg, rng), InvalidArgument);
}

TEST_CASE("noise-free preamble synthesis") {
  World w = world_42();
  Rng rng(4);
  ActivityVector none(42, 0);
  cvec h = draw_channel(42, rng);
  cvec y0 = synthesize_preamble_rx(none, h, w.map, w.set, 0.0, rng);
  for (const auto& x : y0) CHECK(x == cxd(0.0, 0.0));

  ActivityVector one(42, 0);
  one[11] = 1;
  cvec y1 = synthesize_preamble_rx(one, h, w.map, w.set, 0.0, rng);
  const cvec& p = w.set.preambles[w.map.entries[11].preamble_index];
  for (uint32_t k = 0; k < 7; ++k) CHECK(y1[k] == h[11] * p[k]);

  // Two active users: term-by-term oracle.
  ActivityVector two(42, 0);
  two[5] = two[29] = 1;
  cvec y2 = synthesize_preamble_rx(two, h, w.map, w.set, 0.0, rng);
  for (uint32_t k = 0; k < 7; ++k) {
    cxd expect = h[5] * w.set.preambles[w.map.entries[5].preamble_index][k] +
                 h[29] * w.set.preambles[w.map.entries[29].preamble_index][k];
    CHECK(y2[k] == expect);
  }
}

TEST_CASE("noise-free data synthesis and linearity") {
  World w = world_42();
  Rng rng(5);
  cvec h = draw_channel(42, rng);
  const uint32_t n_d = 4;
  std::vector<uint8_t> bits(42 * n_d * 2);
  for (auto& b : bits) b = static_cast<uint8_t>(rng.below(2));

  // One active user with known bits: every symbol is h_n * codeword.
  ActivityVector one(42, 0);
  one[8] = 1;
  auto y1 = synthesize_data_rx(one, h, w.map, w.cbs, bits, n_d, 0.0, rng);
  const Codebook& cb = w.cbs.codebooks[w.map.entries[8].cb_index];
  for (uint32_t i = 0; i < n_d; ++i) {
    size_t idx = 2 * bits[(8 * n_d + i) * 2] + bits[(8 * n_d + i) * 2 + 1];
    for (uint32_t k = 0; k < 4; ++k)
      CHECK(y1[i][k] == h[8] * cb.codewords[idx].entries[k]);
  }

  // Same-codebook collision (CTUs 2 and 8 share cb 2): summation oracle,
  // and linearity over disjoint supports.
  ActivityVector other(42, 0);
  other[2] = 1;
  auto y2 = synthesize_data_rx(other, h, w.map, w.cbs, bits, n_d, 0.0, rng);
  ActivityVector both(42, 0);
  both[2] = both[8] = 1;
  auto yb = synthesize_data_rx(both, h, w.map, w.cbs, bits, n_d, 0.0, rng);
  for (uint32_t i = 0; i < n_d; ++i)
    for (uint32_t k = 0; k < 4; ++k)
      CHECK(std::abs(yb[i][k] - (y1[i][k] + y2[i][k])) < 1e-15);
}

TEST_CASE("realify layout") {
  std::vector<float> r = realify({cxd(1.0, 2.0)});
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 1.0f);
  CHECK(r[1] == 2.0f);
  cvec v = {cxd(0.5, -1.0), cxd(3.0, 4.0)};
  std::vector<float> rv = realify(v);
  REQUIRE(rv.size() == 4);
  // [Re; Im]
  CHECK(rv[0] == 0.5f);
  CHECK(rv[1] == 3.0f);
  CHECK(rv[2] == -1.0f);
  CHECK(rv[3] == 4.0f);
}

TEST_CASE("snr convention") {
  CHECK(snr_to_sigma(0.0) == doctest::Approx(1.0));
  CHECK(snr_to_sigma(20.0) * snr_to_sigma(20.0) == doctest::Approx(0.01));
  CHECK(snr_to_sigma(10.0) * snr_to_sigma(10.0) == doctest::Approx(0.1));
}

TEST_CASE("generate_batch dimensions and determinism") {
  World w = world_42();
  SimConfig cfg = config_42(20.0);
  cfg.n_d = 16;
  Rng ra(9), rb(9);
  TransmissionBatch a = generate_batch(cfg, w.map, w.set, w.cbs, 50, ra);
  TransmissionBatch b = generate_batch(cfg, w.map, w.set, w.cbs, 50, rb);
  REQUIRE(a.frames.size() == 50);
  for (size_t f = 0; f < 50; ++f) {
    CHECK(a.frames[f].y_p.size() == 7);
    CHECK(a.frames[f].y_d.size() == 16);
    CHECK(a.y_p_real[f].size() == 14);
    CHECK(a.y_d_real[f].size() == 16 * 8);
    CHECK(a.labels[f].size() == 42);
    CHECK(a.y_p_real[f] == b.y_p_real[f]);
    CHECK(a.y_d_real[f] == b.y_d_real[f]);
    CHECK(a.labels[f] == b.labels[f]);
    CHECK(a.frames[f].y_p == b.frames[f].y_p);
  }
}

TEST_CASE("noise-free batch matches truth reconstruction") {
  World w = world_42();
  SimConfig cfg = config_42(1000.0);  // sigma ~ 1e-50: exact in double
  cfg.n_d = 4;
  Rng rng(10);
  TransmissionBatch batch = generate_batch(cfg, w.map, w.set, w.cbs, 20, rng);
  for (const auto& frame : batch.frames) {
    Rng dummy(0);
    cvec y_p =
        synthesize_preamble_rx(frame.truth, frame.h, w.map, w.set, 0.0, dummy);
    auto y_d = synthesize_data_rx(frame.truth, frame.h, w.map, w.cbs,
                                  frame.bits, 4, 0.0, dummy);
    for (uint32_t k = 0; k < 7; ++k)
      CHECK(std::abs(frame.y_p[k] - y_p[k]) < 1e-12);
    for (uint32_t i = 0; i < 4; ++i)
      for (uint32_t k = 0; k < 4; ++k)
        CHECK(std::abs(frame.y_d[i][k] - y_d[i][k]) < 1e-12);
  }
}

TEST_CASE("shard round trip") {
  World w = world_42();
  SimConfig cfg = config_42(20.0);
  cfg.n_d = 4;
  Rng rng(11);
  TransmissionBatch batch = generate_batch(cfg, w.map, w.set, w.cbs, 8, rng);
  const std::string path = "shard_test.bin";
  save_shard(batch, cfg, path);
  SimConfig cfg2;
  TransmissionBatch loaded = load_shard(path, cfg2);
  CHECK(cfg2.n_r == cfg.n_r);
  CHECK(cfg2.n_zc == cfg.n_zc);
  CHECK(cfg2.n_d == cfg.n_d);
  REQUIRE(loaded.frames.size() == 8);
  for (size_t f = 0; f < 8; ++f) {
    CHECK(loaded.frames[f].truth == batch.frames[f].truth);
    CHECK(loaded.y_p_real[f] == batch.y_p_real[f]);
    CHECK(loaded.y_d_real[f] == batch.y_d_real[f]);
  }
  std::remove(path.c_str());
}
