#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "dedupfreq/errors.hpp"

namespace dedupfreq {

// Fixed-width opaque identifier of a chunk's content. The width is
// uniform within one trace corpus (6 bytes for 48-bit traces, 20 for
// SHA-1 traces, 8 for synthetic corpora).
class Fingerprint {
 public:
  static constexpr std::size_t kMinWidth = 4;
  static constexpr std::size_t kMaxWidth = 32;

  Fingerprint() = default;

  Fingerprint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMinWidth || bytes.size() > kMaxWidth) {
      throw std::invalid_argument("fingerprint width out of range [4,32]: " +
                                  std::to_string(bytes.size()));
    }
    width_ = static_cast<std::uint8_t>(bytes.size());
    std::memcpy(bytes_.data(), bytes.data(), bytes.size());
  }

  static Fingerprint from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
      throw ParseError("fingerprint hex has odd length: " + std::string(hex));
    }
    std::array<std::uint8_t, kMaxWidth> buf{};
    const std::size_t width = hex.size() / 2;
    if (width < kMinWidth || width > kMaxWidth) {
      throw ParseError("fingerprint width out of range [4,32]: " +
                       std::to_string(width));
    }
    for (std::size_t i = 0; i < width; ++i) {
      const int hi = hex_digit(hex[2 * i]);
      const int lo = hex_digit(hex[2 * i + 1]);
      if (hi < 0 || lo < 0) {
        throw ParseError("invalid hex in fingerprint: " + std::string(hex));
      }
      buf[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return Fingerprint(std::span<const std::uint8_t>(buf.data(), width));
  }

  std::size_t width() const { return width_; }
  bool empty() const { return width_ == 0; }

  std::span<const std::uint8_t> bytes() const {
    return {bytes_.data(), static_cast<std::size_t>(width_)};
  }

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * width_);
    for (std::size_t i = 0; i < width_; ++i) {
      out.push_back(kDigits[bytes_[i] >> 4]);
      out.push_back(kDigits[bytes_[i] & 0x0f]);
    }
    return out;
  }

  // Value of the fingerprint, read as a big-endian integer, modulo d.
  std::uint64_t mod(std::uint64_t d) const {
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < width_; ++i) {
      r = (r * 256u + bytes_[i]) % d;
    }
    return r;
  }

  friend bool operator==(const Fingerprint& a, const Fingerprint& b) {
    return a.width_ == b.width_ &&
           std::memcmp(a.bytes_.data(), b.bytes_.data(), a.width_) == 0;
  }

  // Bytewise lexicographic order; shorter widths compare as prefixes.
  friend std::strong_ordering operator<=>(const Fingerprint& a,
                                          const Fingerprint& b) {
    const std::size_t n = a.width_ < b.width_ ? a.width_ : b.width_;
    const int c = std::memcmp(a.bytes_.data(), b.bytes_.data(), n);
    if (c != 0) return c < 0 ? std::strong_ordering::less
                             : std::strong_ordering::greater;
    return a.width_ <=> b.width_;
  }

  std::size_t hash_value() const {
    // FNV-1a over the active bytes.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < width_; ++i) {
      h ^= bytes_[i];
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }

 private:
  static int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  std::array<std::uint8_t, kMaxWidth> bytes_{};
  std::uint8_t width_ = 0;
};

}  // namespace dedupfreq

template <>
struct std::hash<dedupfreq::Fingerprint> {
  std::size_t operator()(const dedupfreq::Fingerprint& fp) const noexcept {
    return fp.hash_value();
  }
};
