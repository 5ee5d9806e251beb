#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wpmec {

// Seeded RNG with portable draw sequences. mt19937_64's output stream is fixed
// by the standard, and the double conversions below avoid generate_canonical
// (whose mapping is implementation-defined), so identical seeds give
// bit-identical draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1): 53 mantissa bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Exponential with unit mean via inverse CDF.
  double exponential() { return -std::log1p(-uniform01()); }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is biased for huge n; n here is always tiny.
    return gen_() % n;
  }

 private:
  std::mt19937_64 gen_;
};

// Mixes a base seed with a stream tag so sub-streams are independent.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace wpmec
