#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

#include "dedupfreq/hash.hpp"

namespace dedupfreq {

// Derives an independent module seed from one root seed and a label, so a
// single CLI --seed reproduces every randomized stage.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<std::uint8_t>(root >> (8 * i));
  }
  const auto digest = sha256_concat(
      std::span<const std::uint8_t>(buf, sizeof(buf)),
      std::span<const std::uint8_t>(
          reinterpret_cast<const std::uint8_t*>(label.data()), label.size()));
  std::uint64_t out = 0;
  std::memcpy(&out, digest.data(), sizeof(out));
  return out;
}

// mt19937_64 with bounded/unit draws done by hand, so the byte stream does
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

  // Uniform in [0, 1) with 53-bit resolution.
  double unit() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double range(double lo, double hi) { return lo + unit() * (hi - lo); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dedupfreq
