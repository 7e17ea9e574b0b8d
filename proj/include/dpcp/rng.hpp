#pragma once

#include <cmath>
#include <cstdint>

namespace dpcp {

// SplitMix64 (Steele, Lea & Flood 2014). Chosen over std engines because the
// whole algorithm fits in three lines and can be re-typed in any language,
// which keeps generated datasets reproducible outside this codebase.
// Gaussians come from Box-Muller applied to (1 - u), so log() never sees 0.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal; pairs are produced together and the spare is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Deterministic sub-stream seed for (seed, stream); used to give each
  // generated matrix and each network node its own independent stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    Rng g(seed);
    const std::uint64_t base = g.next_u64();
    Rng h(base + stream);
    return h.next_u64();
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpcp
