#pragma once

#include <cmath>
#include <cstdint>

namespace acpose {

// Deterministic generator with hand-rolled transforms. Benchmark tables must
// be bit-identical across runs, worker counts and standard libraries, so the
// distribution code cannot come from <random>.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int below(int n) { return static_cast<int>(uniform() * n); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Stream derivation for parallel trials: mixes (seed, a, b) into an
  // independent stream so worker scheduling cannot change results.
  static uint64_t derive(uint64_t seed, uint64_t a, uint64_t b) {
    Rng mixer(seed ^ (0x9e3779b97f4a7c15ULL + a * 0xff51afd7ed558ccdULL +
                      b * 0xc4ceb9fe1a85ec53ULL));
    mixer.next_u64();
    return mixer.next_u64();
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace acpose
