#pragma once

#include <cmath>
#include <cstdint>

namespace coltrack {

/// Deterministic PRNG used for every random draw in the project.
/// splitmix64 core with Box-Muller normals; results depend only on the seed,
/// not on the standard library, so sequences are stable across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
  /// so the stream position is a pure function of the draw count.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Derive an independent child seed; used to give each consumer
  /// (schedule jitter, sensor noise, weight init, ...) its own stream.
  std::uint64_t fork(std::uint64_t stream_id) {
    Rng tmp(state_ ^ (0x632be59bd9b4e019ULL * (stream_id + 1)));
    return tmp.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace coltrack
