#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <random>
#include <span>
#include <vector>

#include "dedupfreq/hash.hpp"
#include "dedupfreq/trace.hpp"

namespace dedupfreq {

struct ChunkerParams {
  std::uint64_t min_size = 2 * 1024;
  std::uint64_t avg_size = 8 * 1024;
  std::uint64_t max_size = 32 * 1024;
  std::size_t fp_width = 8;

  void validate() const {
    if (min_size == 0 || min_size > avg_size || avg_size > max_size) {
      throw std::invalid_argument("chunker sizes must satisfy 0 < min <= avg <= max");
    }
    if (fp_width < Fingerprint::kMinWidth || fp_width > Fingerprint::kMaxWidth) {
      throw std::invalid_argument("chunker fingerprint width out of range");
    }
  }
};

namespace detail {

// Byte-mix table for the gear rolling hash. Fixed seed keeps chunk
// boundaries identical across builds and runs.
inline const std::array<std::uint64_t, 256>& gear_table() {
  static const std::array<std::uint64_t, 256> table = [] {
    std::array<std::uint64_t, 256> t{};
    std::mt19937_64 eng(0x6765617274616265ull);
    for (auto& v : t) v = eng();
    return t;
  }();
  return table;
}

}  // namespace detail

// Content-defined chunking with a gear rolling hash. Boundaries depend on
// a sliding window of recent bytes only, so inserting a prefix leaves the
// boundaries of a suffix unchanged. Every chunk size lies in
// [min_size, max_size]; content shorter than min_size becomes one chunk.
inline BackupTrace chunk_bytes(std::span<const std::uint8_t> content,
                               const ChunkerParams& params,
                               std::string label = {}) {
  params.validate();
  const auto& gear = detail::gear_table();
  // After min_size bytes the boundary test succeeds with probability 1/d
  // per byte, giving expected chunk size min + d.
  const std::uint64_t d =
      params.avg_size > params.min_size ? params.avg_size - params.min_size : 1;

  BackupTrace trace(std::move(label));
  std::size_t start = 0;
  std::uint64_t h = 0;
  for (std::size_t pos = 0; pos < content.size(); ++pos) {
    h = (h << 1) + gear[content[pos]];
    const std::uint64_t len = pos - start + 1;
    const bool at_pattern = len >= params.min_size && h % d == d - 1;
    const bool at_max = len >= params.max_size;
    const bool at_end = pos + 1 == content.size();
    if (at_pattern || at_max || at_end) {
      trace.push_back({truncated_sha256(content.subspan(start, len),
                                        params.fp_width),
                       len});
      start = pos + 1;
      h = 0;
    }
  }
  return trace;
}

inline BackupTrace chunk_stream(std::istream& in, const ChunkerParams& params,
                                std::string label = {}) {
  std::vector<std::uint8_t> content(std::istreambuf_iterator<char>(in), {});
  return chunk_bytes(content, params, std::move(label));
}

}  // namespace dedupfreq
