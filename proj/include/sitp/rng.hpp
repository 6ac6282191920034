#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace sitp {

// Seeded random source with a platform-independent draw sequence.
//
// The standard distributions are implementation-defined, so doubles and
// bounded integers are derived from the raw mt19937_64 output here. Every
// method documents how many engine outputs it consumes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // One engine output. Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [0, n). Rejection sampling; usually one engine output.
  std::size_t uniform_index(std::size_t n);

  // One engine output.
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next_u64() { return engine_(); }

  // Independent child stream, derived by SplitMix64 from (seed, stream_id).
  static Rng derive(std::uint64_t seed, std::uint64_t stream_id);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sitp
