#include "sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace gfs {

namespace {

uint32_t bits_per_block(uint32_t M) {
  uint32_t b = 0;
  for (uint32_t m = M; m > 1; m >>= 1) ++b;
  return b;
}

}  // namespace

void SimConfig::validate() const {
  if (n_r == 0 || J == 0 || n_r % J != 0)
    throw InvalidArgument("SimConfig: N_R must be a positive multiple of J");
  if (n_d < 1) throw InvalidArgument("SimConfig: N_d must be >= 1");
  if (!std::isfinite(snr_db)) throw InvalidArgument("SimConfig: snr_db not finite");
  if (activity_mode == ActivityMode::kFixedCount) {
    if (n_active_min < 1 || n_active_min > n_active_max || n_active_max > n_r)
      throw InvalidArgument("SimConfig: need 1 <= n_active_min <= n_active_max <= N_R");
  } else if (bernoulli_p < 0.0 || bernoulli_p > 1.0) {
    throw InvalidArgument("SimConfig: bernoulli_p out of [0,1]");
  }
}

double snr_to_sigma(double snr_db) {
  if (!std::isfinite(snr_db)) throw InvalidArgument("snr_db not finite");
  return std::sqrt(std::pow(10.0, -snr_db / 10.0));
}

ActivityVector draw_activity(const SimConfig& cfg, Rng& rng) {
  ActivityVector delta(cfg.n_r, 0);
  if (cfg.activity_mode == ActivityMode::kBernoulli) {
    for (auto& d : delta) d = rng.uniform() < cfg.bernoulli_p ? 1 : 0;
    return delta;
  }
  uint32_t span = cfg.n_active_max - cfg.n_active_min + 1;
  uint32_t n_a = cfg.n_active_min + static_cast<uint32_t>(rng.below(span));
  if (n_a > cfg.n_r) throw InvalidArgument("N_a exceeds N_R");
  // Floyd's algorithm for a uniform n_a-subset.
  for (uint32_t i = cfg.n_r - n_a; i < cfg.n_r; ++i) {
    uint32_t t = static_cast<uint32_t>(rng.below(i + 1));
    if (delta[t])
      delta[i] = 1;
    else
      delta[t] = 1;
  }
  return delta;
}

cvec draw_channel(uint32_t n_r, Rng& rng) {
  cvec h(n_r);
  for (auto& x : h) {
    auto [re, im] = rng.cn01();
    x = {re, im};
  }
  return h;
}

cvec synthesize_preamble_rx(const ActivityVector& delta, const cvec& h,
                            const CtuMap& map, const PreambleSet& set,
                            double sigma, Rng& rng) {
  if (delta.size() != h.size() || delta.size() != map.size() ||
      map.size() != set.size())
    throw InvalidArgument("synthesize_preamble_rx: dimension mismatch");
  if (sigma < 0.0) throw InvalidArgument("sigma must be >= 0");
  cvec y(set.n_zc, {0.0, 0.0});
  for (uint32_t n = 0; n < delta.size(); ++n) {
    if (!delta[n]) continue;
    const cvec& p = set.preambles[map.entries[n].preamble_index];
    for (uint32_t k = 0; k < set.n_zc; ++k) y[k] += h[n] * p[k];
  }
  for (auto& x : y) {
    auto [re, im] = rng.cn01();
    x += sigma * cxd(re, im);
  }
  return y;
}

std::vector<cvec> synthesize_data_rx(const ActivityVector& delta, const cvec& h,
                                     const CtuMap& map, const CodebookSet& cbs,
                                     const std::vector<uint8_t>& bits,
                                     uint32_t n_d, double sigma, Rng& rng) {
  const uint32_t n_r = static_cast<uint32_t>(delta.size());
  const uint32_t bpb = bits_per_block(cbs.M);
  if (h.size() != n_r || map.size() != n_r || map.J != cbs.J())
    throw InvalidArgument("synthesize_data_rx: dimension mismatch");
  if (bits.size() != static_cast<size_t>(n_r) * n_d * bpb)
    throw InvalidArgument("synthesize_data_rx: bit count mismatch");
  if (sigma < 0.0) throw InvalidArgument("sigma must be >= 0");
  std::vector<cvec> y(n_d, cvec(cbs.K, {0.0, 0.0}));
  std::vector<uint8_t> block(bpb);
  for (uint32_t n = 0; n < n_r; ++n) {
    if (!delta[n]) continue;
    const Codebook& cb = cbs.codebooks[map.entries[n].cb_index];
    for (uint32_t i = 0; i < n_d; ++i) {
      size_t off = (static_cast<size_t>(n) * n_d + i) * bpb;
      std::copy(bits.begin() + off, bits.begin() + off + bpb, block.begin());
      const Codeword& w = encode_block(block, cb);
      for (uint32_t k = 0; k < cbs.K; ++k) y[i][k] += h[n] * w.entries[k];
    }
  }
  for (auto& frame : y) {
    for (auto& x : frame) {
      auto [re, im] = rng.cn01();
      x += sigma * cxd(re, im);
    }
  }
  return y;
}

std::vector<float> realify(const cvec& v) {
  std::vector<float> out(2 * v.size());
  for (size_t k = 0; k < v.size(); ++k) {
    out[k] = static_cast<float>(v[k].real());
    out[v.size() + k] = static_cast<float>(v[k].imag());
  }
  return out;
}

TransmissionBatch generate_batch(const SimConfig& cfg, const CtuMap& map,
                                 const PreambleSet& set, const CodebookSet& cbs,
                                 uint32_t batch_size, Rng& rng) {
  cfg.validate();
  const double sigma = snr_to_sigma(cfg.snr_db);
  const uint32_t bpb = bits_per_block(cbs.M);
  TransmissionBatch batch;
  batch.frames.reserve(batch_size);
  for (uint32_t f = 0; f < batch_size; ++f) {
    Rng frame_rng = rng.substream(f);
    ReceivedFrame frame;
    frame.truth = draw_activity(cfg, frame_rng);
    frame.h = draw_channel(cfg.n_r, frame_rng);
    frame.bits.resize(static_cast<size_t>(cfg.n_r) * cfg.n_d * bpb);
    for (auto& b : frame.bits) b = static_cast<uint8_t>(frame_rng.below(2));
    frame.y_p = synthesize_preamble_rx(frame.truth, frame.h, map, set, sigma,
                                       frame_rng);
    frame.y_d = synthesize_data_rx(frame.truth, frame.h, map, cbs, frame.bits,
                                   cfg.n_d, sigma, frame_rng);
    batch.y_p_real.push_back(realify(frame.y_p));
    std::vector<float> yd;
    yd.reserve(static_cast<size_t>(cfg.n_d) * 2 * cfg.K);
    for (const auto& sym : frame.y_d) {
      auto r = realify(sym);
      yd.insert(yd.end(), r.begin(), r.end());
    }
    batch.y_d_real.push_back(std::move(yd));
    std::vector<float> label(frame.truth.begin(), frame.truth.end());
    batch.labels.push_back(std::move(label));
    batch.frames.push_back(std::move(frame));
  }
  return batch;
}

namespace {

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError("truncated shard file");
}

void put_cvec_f32(std::ofstream& out, const cvec& v) {
  for (const auto& x : v) {
    put(out, static_cast<float>(x.real()));
    put(out, static_cast<float>(x.imag()));
  }
}

cvec get_cvec_f32(std::ifstream& in, size_t n) {
  cvec v(n);
  for (auto& x : v) {
    float re, im;
    get(in, re);
    get(in, im);
    x = {re, im};
  }
  return v;
}

}  // namespace

void save_shard(const TransmissionBatch& batch, const SimConfig& cfg,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write("GFSB1", 5);
  put(out, cfg.n_r);
  put(out, cfg.J);
  put(out, cfg.K);
  put(out, cfg.N);
  put(out, cfg.M);
  put(out, cfg.n_d);
  put(out, cfg.n_zc);
  put(out, cfg.snr_db);
  put(out, static_cast<uint32_t>(cfg.activity_mode));
  put(out, cfg.n_active_min);
  put(out, cfg.n_active_max);
  put(out, cfg.bernoulli_p);
  put(out, cfg.seed);
  put(out, static_cast<uint32_t>(batch.frames.size()));
  const size_t bitmap_bytes = (cfg.n_r + 7) / 8;
  for (const auto& frame : batch.frames) {
    std::vector<uint8_t> bitmap(bitmap_bytes, 0);
    for (uint32_t n = 0; n < cfg.n_r; ++n)
      if (frame.truth[n]) bitmap[n / 8] |= static_cast<uint8_t>(1u << (n % 8));
    out.write(reinterpret_cast<const char*>(bitmap.data()), bitmap.size());
    put_cvec_f32(out, frame.h);
    put_cvec_f32(out, frame.y_p);
    for (const auto& sym : frame.y_d) put_cvec_f32(out, sym);
  }
}

TransmissionBatch load_shard(const std::string& path, SimConfig& cfg_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open shard file " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, "GFSB1", 5) != 0)
    throw ParseError(path + ": bad shard magic");
  SimConfig cfg;
  uint32_t mode, count;
  get(in, cfg.n_r);
  get(in, cfg.J);
  get(in, cfg.K);
  get(in, cfg.N);
  get(in, cfg.M);
  get(in, cfg.n_d);
  get(in, cfg.n_zc);
  get(in, cfg.snr_db);
  get(in, mode);
  get(in, cfg.n_active_min);
  get(in, cfg.n_active_max);
  get(in, cfg.bernoulli_p);
  get(in, cfg.seed);
  get(in, count);
  cfg.activity_mode = static_cast<ActivityMode>(mode);
  const size_t bitmap_bytes = (cfg.n_r + 7) / 8;
  TransmissionBatch batch;
  for (uint32_t f = 0; f < count; ++f) {
    ReceivedFrame frame;
    std::vector<uint8_t> bitmap(bitmap_bytes);
    in.read(reinterpret_cast<char*>(bitmap.data()), bitmap.size());
    if (!in) throw ParseError(path + ": truncated frame " + std::to_string(f));
    frame.truth.resize(cfg.n_r);
    for (uint32_t n = 0; n < cfg.n_r; ++n)
      frame.truth[n] = (bitmap[n / 8] >> (n % 8)) & 1u;
    frame.h = get_cvec_f32(in, cfg.n_r);
    frame.y_p = get_cvec_f32(in, cfg.n_zc);
    frame.y_d.resize(cfg.n_d);
    for (auto& sym : frame.y_d) sym = get_cvec_f32(in, cfg.K);
    batch.y_p_real.push_back(realify(frame.y_p));
    std::vector<float> yd;
    for (const auto& sym : frame.y_d) {
      auto r = realify(sym);
      yd.insert(yd.end(), r.begin(), r.end());
    }
    batch.y_d_real.push_back(std::move(yd));
    std::vector<float> label(frame.truth.begin(), frame.truth.end());
    batch.labels.push_back(std::move(label));
    batch.frames.push_back(std::move(frame));
  }
  cfg_out = cfg;
  return batch;
}

}  // namespace gfs
