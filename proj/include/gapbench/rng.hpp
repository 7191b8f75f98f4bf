#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace gapbench {

// Generation is reproducible byte-for-byte: every consumer derives its own
// stream from (master seed, phase, index), so thread scheduling and insertion
// order never influence what a stream produces.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class Phase : std::uint64_t {
  grammar_build = 1,
  trajectory = 2,
  noise_gaps = 3,
  distractor_gaps = 4,
  weights = 5,
  inputs = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, Phase phase, std::uint64_t index) {
  std::uint64_t s = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(phase)));
  return splitmix64(s ^ splitmix64(index));
}

// mt19937_64 output is pinned by the standard; the distributions are
// hand-rolled because std:: distributions are implementation-defined and
// would break cross-platform reproducibility.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Unbiased draw from [0, n) via masked rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      std::uint64_t x = next_u64() & mask;
      if (x < n) return x;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; the log argument is in (0, 1] so it never sees zero.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Index draw by cumulative walk; ties broken by index order, which is part
  // of the format contract.
  std::size_t categorical(std::span<const double> probs) {
    double u = uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gapbench
