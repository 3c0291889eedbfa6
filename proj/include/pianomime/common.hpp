#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pianomime {

// Deterministic RNG. All stochastic code in the library draws through this
// wrapper; the mapping from raw engine output to doubles is written out
// explicitly so that streams are reproducible across platforms and standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64 and
  // acceptable here; determinism matters more than exactness of the law.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    return next_u64() % n;
  }

  // Standard normal via Box-Muller. Consumes exactly two uniforms per draw;
  // no cached spare, so the stream position is a pure function of call count.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Derives an independent child stream. Used to give each parallel work item
  // its own generator so results do not depend on thread scheduling.
  Rng split(std::uint64_t stream_id) {
    std::uint64_t s = next_u64();
    // SplitMix64 finalizer mixes the stream id into the child seed.
    std::uint64_t z = s + 0x9E3779B97F4A7C15ull * (stream_id + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 engine_;
};

struct BBox {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();

  BBox inflated(double frac) const {
    Eigen::Vector3d c = 0.5 * (lo + hi);
    Eigen::Vector3d h = 0.5 * (hi - lo) * (1.0 + frac);
    return BBox{c - h, c + h};
  }

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

inline double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace pianomime
