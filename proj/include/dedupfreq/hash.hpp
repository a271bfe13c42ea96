#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dedupfreq/fingerprint.hpp"

namespace dedupfreq {

inline std::array<std::uint8_t, 32> sha256(
    std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 32> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != digest.size()) {
    throw std::runtime_error("sha256 digest failed");
  }
  return digest;
}

inline std::array<std::uint8_t, 32> sha256_concat(
    std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::vector<std::uint8_t> buf;
  buf.reserve(a.size() + b.size());
  buf.insert(buf.end(), a.begin(), a.end());
  buf.insert(buf.end(), b.begin(), b.end());
  return sha256(buf);
}

// First `width` bytes of SHA-256(data), as a fingerprint.
inline Fingerprint truncated_sha256(std::span<const std::uint8_t> data,
                                    std::size_t width) {
  const auto digest = sha256(data);
  return Fingerprint(std::span<const std::uint8_t>(digest.data(), width));
}

}  // namespace dedupfreq
