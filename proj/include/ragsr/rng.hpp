#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ragsr {

// Portable seeded generator shared by weight init, test vectors and noise.
//
// Bits come from std::mt19937_64, whose output sequence is fixed by the
// standard. Distributions are implemented here rather than through
// <random>'s distribution classes, whose algorithms are
// implementation-defined; this keeps every derived value identical across
// standard libraries.
//   uniform(): top 53 bits scaled to [0, 1)
//   normal():  Box-Muller on two uniforms, second variate cached
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi], inclusive. Uses rejection to avoid bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used to derive per-caption sub-seeds.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer; mixes a seed with a stream id into an independent seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ragsr
