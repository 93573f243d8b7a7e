// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace roboaug {

// Hash-based lattice value in [0, 1); portable and allocation-free.
inline double noise_lattice(std::uint64_t seed, int ix, int iy) {
  std::uint64_t h = seed;
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) * 0x9e3779b97f4a7c15ull;
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)) * 0xc2b2ae3d27d4eb4full;
  h ^= h >> 29;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 32;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double value_noise(std::uint64_t seed, double x, double y) {
  int ix = static_cast<int>(std::floor(x));
  int iy = static_cast<int>(std::floor(y));
  double fx = x - ix, fy = y - iy;
  auto smooth = [](double t) { return t * t * (3 - 2 * t); };
  double v00 = noise_lattice(seed, ix, iy), v10 = noise_lattice(seed, ix + 1, iy);
  double v01 = noise_lattice(seed, ix, iy + 1), v11 = noise_lattice(seed, ix + 1, iy + 1);
  double sx = smooth(fx), sy = smooth(fy);
  double a = v00 + (v10 - v00) * sx;
  double b = v01 + (v11 - v01) * sx;
  return a + (b - a) * sy;
}

inline double fbm_noise(std::uint64_t seed, double x, double y, int octaves) {
  double sum = 0, amp = 1, freq = 1, norm = 0;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * value_noise(seed + static_cast<std::uint64_t>(o) * 101, x * freq, y * freq);
    norm += amp;
    amp *= 0.5;
    freq *= 2;
  }
  return sum / norm;
}

}  // namespace roboaug
