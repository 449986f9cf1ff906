#pragma once

// Portable random draws. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the transforms below are written out
// explicitly because the standard distributions differ between library
// implementations.
//
//   uniform01: (x >> 11) * 2^-53, one engine call, in [0, 1)
//   normal:    Box-Muller cosine branch, two uniform01 calls (u1 then u2):
//              sqrt(-2 ln(1 - u1)) * cos(2 pi u2)

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qaf2d {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qaf2d
