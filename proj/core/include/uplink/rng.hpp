#pragma once

#include <cstdint>
#include <random>

namespace uplink {

/// Role of an RNG stream within one run. New roles get new values; existing
/// values never change, so adding a stream never perturbs the others.
enum class StreamRole : std::uint64_t {
  Channel = 1,
  Tcp = 2,
};

/// Seed for (base seed, run, subscriber station, role). Each component is
/// folded in with a splitmix64 finalizer:
///   s0 = mix(base), s1 = mix(s0 ^ run), s2 = mix(s1 ^ (ss + 1)),
///   seed = mix(s2 ^ role).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run_index,
                          std::uint64_t ss_index, StreamRole role);

std::uint64_t splitmix64(std::uint64_t x);

/// Explicitly seeded 64-bit Mersenne Twister with portable variate
/// transforms (the std distributions are implementation defined).
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double mean);

  /// Box-Muller, one variate per call.
  double normal(double mean, double stddev);

private:
  std::mt19937_64 engine_;
};

} // namespace uplink
