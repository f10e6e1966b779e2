#include "uplink/rng.hpp"

#include <cmath>
#include <numbers>

namespace uplink {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run_index, std::uint64_t ss_index,
                          StreamRole role) {
  std::uint64_t s = splitmix64(base);
  s = splitmix64(s ^ run_index);
  s = splitmix64(s ^ (ss_index + 1));
  return splitmix64(s ^ static_cast<std::uint64_t>(role));
}

double RandomStream::exponential(double mean) {
  return -mean * std::log1p(-uniform());
}

double RandomStream::normal(double mean, double stddev) {
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace uplink
