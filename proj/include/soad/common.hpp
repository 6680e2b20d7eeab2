#ifndef SOAD_COMMON_HPP
#define SOAD_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace soad {

// Tolerance policy, used everywhere.
//  kFeasTol  - simplex sums, constraint feasibility, mass conservation
//  kPropTol  - linearity / round-trip / identity property checks
//  kObjTol   - solver objective comparisons against oracles
inline constexpr double kFeasTol = 1e-9;
inline constexpr double kPropTol = 1e-12;
inline constexpr double kObjTol = 1e-7;

using Rng = std::mt19937_64;

inline double urand(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::uint64_t seed_from_env(std::uint64_t fallback = 12345) {
  if (const char* s = std::getenv("SOAD_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
    }
  }
  return fallback;
}

}  // namespace soad

#endif  // SOAD_COMMON_HPP
