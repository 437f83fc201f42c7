#pragma once

#include <cstdint>
#include <utility>

namespace gfs {

// Counter-based generator: every output is a keyed hash of (seed, stream,
// counter), so substreams never overlap and any draw can be reproduced
// without replaying the sequence.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : seed_(seed), stream_(stream), counter_(0) {}

  // Derives an independent substream; the parent's state is untouched.
  Rng substream(uint64_t id) const {
    return Rng(seed_, mix(stream_ ^ 0x9e3779b97f4a7c15ULL, id));
  }

  uint64_t next_u64() { return mix(key(), counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);

  // Standard normal, Box-Muller.
  double gaussian();

  // Circularly-symmetric complex Gaussian with E[|z|^2] = 1,
  // returned as (re, im).
  std::pair<double, double> cn01();

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

 private:
  static uint64_t mix(uint64_t a, uint64_t b);
  uint64_t key() const { return mix(seed_, stream_ ^ 0xd1b54a32d192ed03ULL); }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Fixed stream-domain tags keeping training and evaluation draws disjoint.
namespace stream_domain {
inline constexpr uint64_t kTraining = 0x5452414eULL;    // "TRAN"
inline constexpr uint64_t kEvaluation = 0x4556414cULL;  // "EVAL"
inline constexpr uint64_t kInit = 0x494e4954ULL;        // "INIT"
inline constexpr uint64_t kAssoc = 0x41534f43ULL;       // "ASOC"
}  // namespace stream_domain

}  // namespace gfs
