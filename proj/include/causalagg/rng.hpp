#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace causalagg {

// Seeded random source. Normal deviates use an explicit Box-Muller transform
// instead of std::normal_distribution, whose algorithm is
// implementation-defined; this keeps sampled output reproducible for a given
// seed across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in (0, 1), never exactly 0.
  double uniform() {
    const double u =
        (static_cast<double>(engine_()) + 1.0) / (static_cast<double>(engine_.max()) + 2.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace causalagg
