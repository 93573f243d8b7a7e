// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roboaug {

enum class ErrorCode {
  MissingFile,
  SchemaViolation,
  DanglingParent,
  CodecError,
  InvalidMaskValue,
  DegenerateBox,
  BackendFailure,
  ZeroVector,
  DimMismatch,
  EmptyReferenceSet,
  NoMatches,
  SeedOutOfBounds,
  MaskRangeError,
  EmptyLibrary,
  ProviderFailure,
  MissingMasks,
  ShapeMismatch,
  ZeroFeature,
  DegenerateBatch,
  NonUnitEmbedding,
  InvalidBox,
  UnknownCategory,
  EmptyGroundTruth,
  ConfigError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

// FNV-1a, used for seed derivation and content hashing.
inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n,
                                 std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic RNG with portable output. All randomness in the pipeline
// flows from one root seed, split per stage by name.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Named substream; independent of draws taken from the parent.
  Rng derive(std::string_view name) const {
    return Rng(fnv1a(name, seed_mix_));
  }

  static Rng derived(std::uint64_t root, std::string_view name) {
    std::uint64_t h = fnv1a(name);
    h ^= root + 0x9e3779b97f4a7c15ull;
    return Rng(h);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; deterministic across platforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_mix_ = 0x9e3779b97f4a7c15ull;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace roboaug
