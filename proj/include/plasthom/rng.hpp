#ifndef PLASTHOM_RNG_HPP
#define PLASTHOM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace plasthom {

// Deterministic random stream. Draws go through fixed arithmetic on raw
// mt19937_64 words (std::*_distribution is implementation-defined, which
// would break byte-identical outputs across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one spare value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return n == 0 ? 0 : engine_() % n;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace plasthom

#endif
