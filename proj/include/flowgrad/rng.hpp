#pragma once

#include <cstdint>
#include <random>

namespace flowgrad {

/// Portable uniform in [0, 1): the top 53 bits of an mt19937_64 draw scaled
/// by 2^-53. Avoids std::uniform_real_distribution, whose output sequence is
/// not pinned down by the standard and differs across library vendors.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace flowgrad
