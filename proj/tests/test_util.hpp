#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "dedupfreq/trace.hpp"

namespace dedupfreq::testutil {

inline Fingerprint fp64(std::uint64_t v, std::size_t width = 8) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<std::uint8_t>(v >> (8 * (7 - i)));  // big-endian
  }
  return Fingerprint(std::span<const std::uint8_t>(buf + (8 - width), width));
}

// The nine-chunk plaintext and twelve-chunk ciphertext sequences of the
// worked locality example: plaintext <M1,M2,M1,M2,M3,M4,M2,M3,M4>,
// ciphertext <C1,C2,C5,C2,C1,C2,C3,C4,C2,C3,C4,C4>. The true mapping is
// Ci -> Mi for i in 1..4; C5's plaintext does not occur in the prior backup.
inline Fingerprint plain_fp(int i) { return fp64(0x1000u + i); }
inline Fingerprint cipher_fp(int i) { return fp64(0x2000u + i); }

inline BackupTrace fig_plain() {
  BackupTrace t("prior");
  for (const int i : {1, 2, 1, 2, 3, 4, 2, 3, 4}) {
    t.push_back({plain_fp(i), 4096});
  }
  return t;
}

inline BackupTrace fig_cipher() {
  BackupTrace t("latest");
  for (const int i : {1, 2, 5, 2, 1, 2, 3, 4, 2, 3, 4, 4}) {
    t.push_back({cipher_fp(i), 4096});
  }
  return t;
}

inline std::unordered_map<Fingerprint, Fingerprint> fig_ground_truth() {
  std::unordered_map<Fingerprint, Fingerprint> gt;
  for (int i = 1; i <= 5; ++i) gt.emplace(cipher_fp(i), plain_fp(i));
  return gt;
}

}  // namespace dedupfreq::testutil
