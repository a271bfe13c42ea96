#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dedupfreq/errors.hpp"
#include "dedupfreq/hash.hpp"
#include "dedupfreq/rng.hpp"
#include "dedupfreq/trace.hpp"

namespace dedupfreq {

// Variable-size segmentation bounds. A boundary falls after a chunk once
// the segment has reached min_bytes and the chunk's fingerprint matches
// the divisor pattern; max_bytes is a hard cap. With the divisor set to
// (avg - min) / mean-chunk-size, the expected segment size is avg_bytes.
struct SegmentParams {
  std::uint64_t min_bytes = 512ull << 10;
  std::uint64_t avg_bytes = 1ull << 20;
  std::uint64_t max_bytes = 2ull << 20;
  std::uint64_t divisor = 64;  // matches 8 KiB mean chunks at the defaults

  void validate() const {
    if (min_bytes == 0 || min_bytes > avg_bytes || avg_bytes > max_bytes) {
      throw std::invalid_argument(
          "segment sizes must satisfy 0 < min <= avg <= max");
    }
    if (divisor == 0) throw std::invalid_argument("divisor must be >= 1");
  }

  static SegmentParams for_mean_chunk_size(std::uint64_t mean_chunk,
                                           std::uint64_t min = 512ull << 10,
                                           std::uint64_t avg = 1ull << 20,
                                           std::uint64_t max = 2ull << 20) {
    SegmentParams p{min, avg, max, 1};
    if (mean_chunk > 0 && avg > min) {
      p.divisor = std::max<std::uint64_t>(1, (avg - min) / mean_chunk);
    }
    p.validate();
    return p;
  }
};

// A contiguous run of chunks plus its minimum fingerprint h, the value the
// segment key is derived from.
struct Segment {
  std::vector<ChunkRecord> chunks;
  Fingerprint min_fp;
  std::uint64_t total_bytes = 0;
};

inline std::vector<Segment> segment(const BackupTrace& trace,
                                    const SegmentParams& params) {
  params.validate();
  std::vector<Segment> segments;
  Segment current;
  const auto& chunks = trace.chunks();
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& c = chunks[i];
    if (current.chunks.empty() || c.fp < current.min_fp) current.min_fp = c.fp;
    current.chunks.push_back(c);
    current.total_bytes += c.size;
    const bool at_pattern = current.total_bytes >= params.min_bytes &&
                            c.fp.mod(params.divisor) == params.divisor - 1;
    const bool next_overflows =
        i + 1 < chunks.size() &&
        current.total_bytes + chunks[i + 1].size > params.max_bytes;
    if (at_pattern || next_overflows) {
      segments.push_back(std::move(current));
      current = Segment{};
    }
  }
  if (!current.chunks.empty()) segments.push_back(std::move(current));
  return segments;
}

// Key derived deterministically from a segment's minimum fingerprint,
// standing in for a key-manager round trip.
struct SegmentKey {
  std::array<std::uint8_t, 32> bytes{};

  friend bool operator==(const SegmentKey&, const SegmentKey&) = default;

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (const auto b : bytes) {
      out.push_back(kDigits[b >> 4]);
      out.push_back(kDigits[b & 0x0f]);
    }
    return out;
  }
};

inline SegmentKey derive_segment_key(const Fingerprint& h) {
  static constexpr std::uint8_t kSystemSecret[] = {
      0x64, 0x64, 0x66, 0x71, 0x2d, 0x73, 0x65, 0x67,
      0x6d, 0x65, 0x6e, 0x74, 0x2d, 0x6b, 0x65, 0x79};
  SegmentKey key;
  key.bytes = sha256_concat(
      std::span<const std::uint8_t>(kSystemSecret, sizeof(kSystemSecret)),
      h.bytes());
  return key;
}

using GroundTruthMap = std::unordered_map<Fingerprint, Fingerprint>;

struct EncryptionOutput {
  BackupTrace cipher_trace;
  GroundTruthMap ground_truth;          // cipher fingerprint -> plain
  std::vector<SegmentKey> key_recipe;   // one key per segment
  std::vector<Fingerprint> file_recipe; // plain fingerprints, original order
};

namespace detail {

inline Fingerprint encrypt_fp(const Fingerprint& key_basis,
                              const Fingerprint& plain) {
  const auto digest = sha256_concat(key_basis.bytes(), plain.bytes());
  return Fingerprint(
      std::span<const std::uint8_t>(digest.data(), plain.width()));
}

}  // namespace detail

// Per-segment encryption keyed by the minimum fingerprint: each ciphertext
// fingerprint is the hash of h concatenated with the plaintext fingerprint,
// truncated to the trace width. Identical plaintext chunks under equal h
// deduplicate; under different h they become distinct ciphertext chunks.
inline EncryptionOutput minhash_encrypt(const BackupTrace& trace,
                                        const SegmentParams& params) {
  EncryptionOutput out;
  out.cipher_trace.set_label(trace.label());
  out.cipher_trace.reserve(trace.size());
  out.file_recipe.reserve(trace.size());
  for (const auto& c : trace) out.file_recipe.push_back(c.fp);
  for (const auto& seg : segment(trace, params)) {
    out.key_recipe.push_back(derive_segment_key(seg.min_fp));
    for (const auto& c : seg.chunks) {
      const Fingerprint cipher = detail::encrypt_fp(seg.min_fp, c.fp);
      out.cipher_trace.push_back({cipher, c.size});
      out.ground_truth.emplace(cipher, c.fp);
    }
  }
  return out;
}

namespace detail {

// Builds the scrambled order of one segment: each chunk goes to the front
// of the output on an odd draw and to the back on an even draw.
template <class DrawFn>
std::deque<ChunkRecord> scramble_chunks(std::span<const ChunkRecord> chunks,
                                        DrawFn&& draw) {
  std::deque<ChunkRecord> out;
  for (const auto& c : chunks) {
    if (draw() % 2 == 1) {
      out.push_front(c);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

// Seeded per-segment shuffle. Boundaries are computed on the input order;
// each segment's chunk multiset is preserved.
inline BackupTrace scramble(const BackupTrace& trace,
                            const SegmentParams& params, std::uint64_t seed) {
  Rng rng(seed);
  BackupTrace out(trace.label());
  out.reserve(trace.size());
  for (const auto& seg : segment(trace, params)) {
    const auto scrambled =
        detail::scramble_chunks(std::span<const ChunkRecord>(seg.chunks),
                                [&rng] { return rng.next(); });
    for (const auto& c : scrambled) out.push_back(c);
  }
  return out;
}

// Baseline deterministic MLE transform: one global renaming of plaintext
// fingerprints, so order and the whole frequency histogram carry over.
inline EncryptionOutput mle_encrypt(const BackupTrace& trace) {
  EncryptionOutput out;
  out.cipher_trace.set_label(trace.label());
  out.cipher_trace.reserve(trace.size());
  out.file_recipe.reserve(trace.size());
  for (const auto& c : trace) {
    const Fingerprint cipher =
        Fingerprint(std::span<const std::uint8_t>(
            sha256(c.fp.bytes()).data(), c.fp.width()));
    out.cipher_trace.push_back({cipher, c.size});
    out.ground_truth.emplace(cipher, c.fp);
    out.file_recipe.push_back(c.fp);
  }
  return out;
}

// Combined defense: scramble within segments, then MinHash-encrypt, with
// both stages sharing the boundaries computed on the pre-scramble order.
// The file recipe keeps the pre-scramble order for reconstruction.
inline EncryptionOutput defend(const BackupTrace& trace,
                               const SegmentParams& params,
                               std::uint64_t seed) {
  Rng rng(seed);
  EncryptionOutput out;
  out.cipher_trace.set_label(trace.label());
  out.cipher_trace.reserve(trace.size());
  out.file_recipe.reserve(trace.size());
  for (const auto& c : trace) out.file_recipe.push_back(c.fp);
  for (const auto& seg : segment(trace, params)) {
    out.key_recipe.push_back(derive_segment_key(seg.min_fp));
    const auto scrambled =
        detail::scramble_chunks(std::span<const ChunkRecord>(seg.chunks),
                                [&rng] { return rng.next(); });
    for (const auto& c : scrambled) {
      const Fingerprint cipher = detail::encrypt_fp(seg.min_fp, c.fp);
      out.cipher_trace.push_back({cipher, c.size});
      out.ground_truth.emplace(cipher, c.fp);
    }
  }
  return out;
}

// Rebuilds the plaintext trace from a restored cipher trace, the ground
// truth map, and the file recipe's original chunk order.
inline BackupTrace reconstruct_plaintext(
    const std::vector<Fingerprint>& file_recipe, const BackupTrace& cipher,
    const GroundTruthMap& ground_truth) {
  std::unordered_map<Fingerprint, std::uint64_t> plain_sizes;
  plain_sizes.reserve(cipher.size());
  for (const auto& c : cipher) {
    const auto it = ground_truth.find(c.fp);
    if (it == ground_truth.end()) {
      throw IntegrityError("ground truth misses cipher fingerprint " +
                           c.fp.hex());
    }
    plain_sizes.emplace(it->second, c.size);
  }
  BackupTrace plain(cipher.label());
  plain.reserve(file_recipe.size());
  for (const auto& fp : file_recipe) {
    const auto it = plain_sizes.find(fp);
    if (it == plain_sizes.end()) {
      throw IntegrityError("restored data misses plain fingerprint " +
                           fp.hex());
    }
    plain.push_back({fp, it->second});
  }
  return plain;
}

// --- serialization -------------------------------------------------------

// Ground truth file: `cipher_hex,plain_hex` lines sorted by cipher.
inline void write_ground_truth(const GroundTruthMap& gt, std::ostream& out) {
  std::vector<std::pair<Fingerprint, Fingerprint>> rows(gt.begin(), gt.end());
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [c, p] : rows) out << c.hex() << ',' << p.hex() << '\n';
  if (!out) throw IoError("failed writing ground truth stream");
}

inline GroundTruthMap read_ground_truth(std::istream& in) {
  GroundTruthMap gt;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError("ground truth line " + std::to_string(lineno) +
                       ": missing ',' separator");
    }
    gt.emplace(Fingerprint::from_hex(std::string_view(line).substr(0, comma)),
               Fingerprint::from_hex(std::string_view(line).substr(comma + 1)));
  }
  return gt;
}

// Recipe file: one plain fingerprint per line, original order.
inline void write_recipe(const std::vector<Fingerprint>& recipe,
                         std::ostream& out) {
  for (const auto& fp : recipe) out << fp.hex() << '\n';
  if (!out) throw IoError("failed writing recipe stream");
}

inline std::vector<Fingerprint> read_recipe(std::istream& in) {
  std::vector<Fingerprint> recipe;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    recipe.push_back(Fingerprint::from_hex(line));
  }
  return recipe;
}

}  // namespace dedupfreq
