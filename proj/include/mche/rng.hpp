#pragma once

#include <cmath>
#include <cstdint>

#include "mche/geometry.hpp"

namespace mche {

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, indices), so generated datasets do not depend on loop
// order and identical seeds reproduce bit-identical files on any platform.

// Stream tags keep independent uses of the same (j, k, ...) indices from
// colliding (e.g. pixel noise vs dropout decisions for the same image).
enum class RngStream : uint64_t {
  kCameraPlacement = 1,
  kEndEffectorPose = 2,
  kBoardMount = 3,
  kPixelNoise = 4,
  kDropout = 5,
  kInitPerturbation = 6,
};

// SplitMix64 finalizer; full-avalanche 64->64 mix.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t h, uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : seed_(seed) {}

  // Uniform in [0, 1) keyed by (stream, a, b, c, d).
  double u01(RngStream stream, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0,
             uint64_t d = 0) const {
    return to_u01(key(stream, a, b, c, d));
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi, RngStream stream, uint64_t a = 0,
                 uint64_t b = 0, uint64_t c = 0, uint64_t d = 0) const {
    return lo + (hi - lo) * u01(stream, a, b, c, d);
  }

  // Standard normal via Box-Muller on two decorrelated hashes of the key.
  double gaussian(RngStream stream, uint64_t a = 0, uint64_t b = 0,
                  uint64_t c = 0, uint64_t d = 0) const {
    const uint64_t h = key(stream, a, b, c, d);
    double u1 = to_u01(mix64(h ^ 0x5851f42d4c957f2dULL));
    const double u2 = to_u01(mix64(h ^ 0x14057b7ef767814fULL));
    if (u1 <= 0.0) u1 = 0x1p-53;  // guard the log
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Uniformly random direction (point on S^2); consumes keys d and d+1.
  Vec3 unit_vector(RngStream stream, uint64_t a = 0, uint64_t b = 0,
                   uint64_t c = 0, uint64_t d = 0) const {
    const double z = uniform(-1.0, 1.0, stream, a, b, c, d);
    const double phi = uniform(0.0, 2.0 * kPi, stream, a, b, c, d + 1);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t key(RngStream stream, uint64_t a, uint64_t b, uint64_t c,
               uint64_t d) const {
    uint64_t h = mix64(seed_);
    h = hash_combine(h, static_cast<uint64_t>(stream));
    h = hash_combine(h, a);
    h = hash_combine(h, b);
    h = hash_combine(h, c);
    h = hash_combine(h, d);
    return h;
  }

  static double to_u01(uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1p-53;
  }

  uint64_t seed_;
};

}  // namespace mche
