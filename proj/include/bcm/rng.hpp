#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bcm {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream tags. Every consumer of randomness draws from its own stream,
/// derived from a master seed and a path of integers:
///
///   trace generation        derive_seed(seed, {trace})
///   ML X0 initialization    derive_seed(seed, {ml_init})
///   BCM-P pair sample       derive_seed(seed, {pair_sample, epoch, t})
///   MSM candidate i         derive_seed(seed, {msm_candidate, i})
///   benchmark trace         derive_seed(master, {benchmark_trace, cell, rep})
///   benchmark estimator     derive_seed(trace_seed, {benchmark_estimator})
namespace stream {
inline constexpr std::uint64_t trace = 1;
inline constexpr std::uint64_t ml_init = 2;
inline constexpr std::uint64_t pair_sample = 3;
inline constexpr std::uint64_t msm_candidate = 4;
inline constexpr std::uint64_t benchmark_trace = 5;
inline constexpr std::uint64_t benchmark_estimator = 6;
}  // namespace stream

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Portable random source. The engine (mt19937_64) has a standardized output
/// sequence; the distributions below are implemented here rather than taken
/// from <random> because those are not bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bcm
