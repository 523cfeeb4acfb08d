#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fapre/linalg.hpp"

namespace fapre {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Child seed for stream `index` of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

/// mt19937_64 with hand-rolled conversions. The standard distributions are
/// implementation-defined, these are not, so streams match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), unbiased.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// CN(0, 1): independent real and imaginary parts of variance 1/2.
  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Seeded source of receiver noise vectors n ~ CN(0, I_N).
class NoiseSampler {
 public:
  explicit NoiseSampler(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  std::uint64_t seed() const { return seed_; }
  /// Number of complex samples drawn so far.
  std::uint64_t position() const { return position_; }

  /// N x count block, one noise vector per column.
  ComplexMatrix draw(Eigen::Index n, Eigen::Index count) {
    ComplexMatrix out(n, count);
    for (Eigen::Index t = 0; t < count; ++t)
      for (Eigen::Index i = 0; i < n; ++i) out(i, t) = rng_.complex_normal();
    position_ += static_cast<std::uint64_t>(n * count);
    return out;
  }

  /// Independent sampler for parallel chunk `index`.
  NoiseSampler child(std::uint64_t index) const { return NoiseSampler(derive_seed(seed_, index)); }

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  Rng rng_;
};

}  // namespace fapre
