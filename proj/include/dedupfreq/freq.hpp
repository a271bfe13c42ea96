#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "dedupfreq/trace.hpp"

namespace dedupfreq {

// Occurrence counts per fingerprint. Also the inner value of a neighbor
// table, where counts are co-occurrence counts with the keyed chunk.
class FrequencyTable {
 public:
  void increment(const Fingerprint& fp, std::uint64_t by = 1) {
    counts_[fp] += by;
  }

  std::uint64_t count(const Fingerprint& fp) const {
    const auto it = counts_.find(fp);
    return it == counts_.end() ? 0 : it->second;
  }

  bool contains(const Fingerprint& fp) const { return counts_.contains(fp); }
  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }

  auto begin() const { return counts_.begin(); }
  auto end() const { return counts_.end(); }

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (const auto& [fp, n] : counts_) sum += n;
    return sum;
  }

  // Entries sorted by (count descending, fingerprint ascending). The byte
  // order of fingerprints is the tie-break that makes runs reproducible.
  std::vector<std::pair<Fingerprint, std::uint64_t>> ranked() const {
    std::vector<std::pair<Fingerprint, std::uint64_t>> v(counts_.begin(),
                                                         counts_.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return v;
  }

 private:
  std::unordered_map<Fingerprint, std::uint64_t> counts_;
};

// Left or right co-occurrence counts: outer key is a chunk, inner table
// counts how often each neighbor appears adjacent to it.
class NeighborTable {
 public:
  void increment(const Fingerprint& fp, const Fingerprint& neighbor) {
    co_[fp].increment(neighbor);
  }

  // Neighbor counts for fp; empty table if fp never had a neighbor on
  // this side. Lookup is by direct key access.
  const FrequencyTable& neighbors_of(const Fingerprint& fp) const {
    static const FrequencyTable kEmpty;
    const auto it = co_.find(fp);
    return it == co_.end() ? kEmpty : it->second;
  }

  std::size_t size() const { return co_.size(); }

 private:
  std::unordered_map<Fingerprint, FrequencyTable> co_;
};

struct CountResult {
  FrequencyTable freq;
  NeighborTable left;
  NeighborTable right;
};

// Single pass over the trace tallying frequencies and left/right
// co-occurrences. The first chunk has no left neighbor, the last no right.
inline CountResult count(const BackupTrace& trace) {
  CountResult r;
  const auto& chunks = trace.chunks();
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    r.freq.increment(chunks[i].fp);
    if (i > 0) r.left.increment(chunks[i].fp, chunks[i - 1].fp);
    if (i + 1 < chunks.size()) r.right.increment(chunks[i].fp, chunks[i + 1].fp);
  }
  return r;
}

using SizeMap = std::unordered_map<Fingerprint, std::uint64_t>;

inline SizeMap chunk_sizes(const BackupTrace& trace) {
  SizeMap sizes;
  sizes.reserve(trace.size());
  for (const auto& c : trace) sizes.emplace(c.fp, c.size);
  return sizes;
}

struct InferredPair {
  Fingerprint cipher;
  Fingerprint plain;

  friend bool operator==(const InferredPair&, const InferredPair&) = default;
};

// Classical frequency analysis: pair the i-th most frequent ciphertext
// chunk with the i-th most frequent plaintext chunk, for up to x ranks.
inline std::vector<InferredPair> freq_analysis(const FrequencyTable& yc,
                                               const FrequencyTable& ym,
                                               std::size_t x) {
  const auto ranked_c = yc.ranked();
  const auto ranked_m = ym.ranked();
  const std::size_t n = std::min({x, ranked_c.size(), ranked_m.size()});
  std::vector<InferredPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs.push_back({ranked_c[i].first, ranked_m[i].first});
  }
  return pairs;
}

// Chunks grouped by cipher-block count s = ceil(size / block_size).
class SizeClassTable {
 public:
  static SizeClassTable classify(const FrequencyTable& table,
                                 const SizeMap& sizes,
                                 std::uint64_t block_size) {
    SizeClassTable t;
    for (const auto& [fp, n] : table) {
      const auto it = sizes.find(fp);
      if (it == sizes.end()) {
        throw std::invalid_argument("no size known for fingerprint " +
                                    fp.hex());
      }
      const std::uint64_t s = (it->second + block_size - 1) / block_size;
      t.classes_[s].increment(fp, n);
    }
    return t;
  }

  const std::map<std::uint64_t, FrequencyTable>& classes() const {
    return classes_;
  }

 private:
  std::map<std::uint64_t, FrequencyTable> classes_;
};

// Frequency analysis restricted to equal block counts: rank-pairs up to x
// chunks within each size class present on both sides, concatenating the
// per-class results in ascending class order.
inline std::vector<InferredPair> size_aware_freq_analysis(
    const FrequencyTable& yc, const FrequencyTable& ym, std::size_t x,
    const SizeMap& cipher_sizes, const SizeMap& plain_sizes,
    std::uint64_t block_size = 16) {
  const auto bc = SizeClassTable::classify(yc, cipher_sizes, block_size);
  const auto bm = SizeClassTable::classify(ym, plain_sizes, block_size);
  std::vector<InferredPair> pairs;
  for (const auto& [s, cipher_class] : bc.classes()) {
    const auto it = bm.classes().find(s);
    if (it == bm.classes().end()) continue;
    const auto per_class = freq_analysis(cipher_class, it->second, x);
    pairs.insert(pairs.end(), per_class.begin(), per_class.end());
  }
  return pairs;
}

// Debug dump: `<hex fp> <count>` lines in rank order.
inline void dump_table(const FrequencyTable& table, std::ostream& out) {
  for (const auto& [fp, n] : table.ranked()) {
    out << fp.hex() << ' ' << n << '\n';
  }
}

}  // namespace dedupfreq
