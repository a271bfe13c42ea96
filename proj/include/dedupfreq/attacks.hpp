#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "dedupfreq/freq.hpp"
#include "dedupfreq/rng.hpp"
#include "dedupfreq/trace.hpp"

namespace dedupfreq {

enum class AttackMode { kCiphertextOnly, kKnownPlaintext };

struct AttackParams {
  std::size_t init_pairs = 1;          // u: seed pairs from global analysis
  std::size_t pairs_per_iter = 15;     // v: pairs per neighbor analysis
  std::size_t queue_capacity = 200000; // w: bound on the inferred queue
  AttackMode mode = AttackMode::kCiphertextOnly;
  bool size_aware = false;
  std::uint64_t block_size = 16;

  void validate() const {
    if (init_pairs == 0 || pairs_per_iter == 0 || queue_capacity == 0) {
      throw std::invalid_argument("attack params u, v, w must be >= 1");
    }
    if (block_size == 0) {
      throw std::invalid_argument("block_size must be >= 1");
    }
  }
};

// The attack output T: each ciphertext chunk maps to at most one inferred
// plaintext chunk; the first inference for a ciphertext wins.
class InferredPairSet {
 public:
  bool try_add(const InferredPair& p) {
    return map_.emplace(p.cipher, p.plain).second;
  }

  bool contains_cipher(const Fingerprint& cipher) const {
    return map_.contains(cipher);
  }

  std::optional<Fingerprint> plain_of(const Fingerprint& cipher) const {
    const auto it = map_.find(cipher);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }
  auto begin() const { return map_.begin(); }
  auto end() const { return map_.end(); }

 private:
  std::unordered_map<Fingerprint, Fingerprint> map_;
};

enum class InferenceSide { kSeed, kLeft, kRight };

inline const char* to_string(InferenceSide side) {
  switch (side) {
    case InferenceSide::kSeed: return "seed";
    case InferenceSide::kLeft: return "left";
    case InferenceSide::kRight: return "right";
  }
  return "?";
}

// How a pair entered T: from which parent pair, on which side, in which
// iteration of the main loop (0 for seeds). Lets tests replay the chain
// of inferences back to a seed.
struct ProvenanceRecord {
  InferredPair pair;
  Fingerprint parent_cipher;  // empty for seeds
  InferenceSide side = InferenceSide::kSeed;
  std::uint64_t iteration = 0;
};

struct AttackResult {
  InferredPairSet pairs;
  std::vector<ProvenanceRecord> provenance;
};

// Ciphertext-plaintext pairs known to the adversary a priori.
struct LeakageSet {
  std::vector<InferredPair> pairs;
  double leakage_rate = 0.0;
};

using GroundTruth = std::unordered_map<Fingerprint, Fingerprint>;

// Rank-pairs the full frequency tables of both traces.
inline AttackResult basic_attack(const BackupTrace& cipher,
                                 const BackupTrace& plain) {
  const auto fc = count(cipher).freq;
  const auto fm = count(plain).freq;
  const auto seeds = freq_analysis(fc, fm, std::min(fc.size(), fm.size()));
  AttackResult result;
  for (const auto& p : seeds) {
    if (result.pairs.try_add(p)) {
      result.provenance.push_back({p, Fingerprint{}, InferenceSide::kSeed, 0});
    }
  }
  return result;
}

namespace detail {

class PairAnalyzer {
 public:
  PairAnalyzer(bool size_aware, std::uint64_t block_size, SizeMap cipher_sizes,
               SizeMap plain_sizes)
      : size_aware_(size_aware),
        block_size_(block_size),
        cipher_sizes_(std::move(cipher_sizes)),
        plain_sizes_(std::move(plain_sizes)) {}

  std::vector<InferredPair> operator()(const FrequencyTable& yc,
                                       const FrequencyTable& ym,
                                       std::size_t x) const {
    if (size_aware_) {
      return size_aware_freq_analysis(yc, ym, x, cipher_sizes_, plain_sizes_,
                                      block_size_);
    }
    return freq_analysis(yc, ym, x);
  }

 private:
  bool size_aware_;
  std::uint64_t block_size_;
  SizeMap cipher_sizes_;
  SizeMap plain_sizes_;
};

}  // namespace detail

// The locality-based attack: seed an inferred FIFO queue with the top
// pair(s) of global frequency analysis (or with leaked pairs in
// known-plaintext mode), then repeatedly pop a pair and rank-pair the
// left-neighbor and right-neighbor tables of its two chunks.
inline AttackResult locality_attack(const BackupTrace& cipher,
                                    const BackupTrace& plain,
                                    const AttackParams& params,
                                    const LeakageSet* leak = nullptr) {
  params.validate();
  if (params.mode == AttackMode::kKnownPlaintext &&
      (leak == nullptr || leak->pairs.empty())) {
    throw std::invalid_argument(
        "known-plaintext mode requires a non-empty leakage set");
  }
  if (params.mode == AttackMode::kCiphertextOnly && leak != nullptr) {
    throw std::invalid_argument("ciphertext-only mode takes no leakage set");
  }

  const CountResult c = count(cipher);
  const CountResult m = count(plain);
  const detail::PairAnalyzer analyze(params.size_aware, params.block_size,
                                     chunk_sizes(cipher), chunk_sizes(plain));

  AttackResult result;
  std::deque<InferredPair> queue;
  const auto enqueue = [&](const InferredPair& p, const Fingerprint& parent,
                           InferenceSide side, std::uint64_t iteration) {
    if (!result.pairs.try_add(p)) return;
    result.provenance.push_back({p, parent, side, iteration});
    if (queue.size() < params.queue_capacity) queue.push_back(p);
  };

  if (params.mode == AttackMode::kCiphertextOnly) {
    for (const auto& p : analyze(c.freq, m.freq, params.init_pairs)) {
      enqueue(p, Fingerprint{}, InferenceSide::kSeed, 0);
    }
  } else {
    // Only leaked pairs whose chunks appear in both traces are usable.
    // Seeds enter in cipher-fingerprint order for reproducibility.
    auto seeds = leak->pairs;
    std::sort(seeds.begin(), seeds.end(),
              [](const InferredPair& a, const InferredPair& b) {
                return a.cipher < b.cipher;
              });
    for (const auto& p : seeds) {
      if (c.freq.contains(p.cipher) && m.freq.contains(p.plain)) {
        enqueue(p, Fingerprint{}, InferenceSide::kSeed, 0);
      }
    }
  }

  std::uint64_t iteration = 0;
  while (!queue.empty()) {
    const InferredPair current = queue.front();
    queue.pop_front();
    ++iteration;
    const auto left_pairs =
        analyze(c.left.neighbors_of(current.cipher),
                m.left.neighbors_of(current.plain), params.pairs_per_iter);
    for (const auto& p : left_pairs) {
      enqueue(p, current.cipher, InferenceSide::kLeft, iteration);
    }
    const auto right_pairs =
        analyze(c.right.neighbors_of(current.cipher),
                m.right.neighbors_of(current.plain), params.pairs_per_iter);
    for (const auto& p : right_pairs) {
      enqueue(p, current.cipher, InferenceSide::kRight, iteration);
    }
  }
  return result;
}

// Locality-based attack with size-aware frequency analysis substituted at
// the seeding call and at both per-iteration neighbor calls.
inline AttackResult advanced_locality_attack(const BackupTrace& cipher,
                                             const BackupTrace& plain,
                                             AttackParams params,
                                             const LeakageSet* leak = nullptr) {
  params.size_aware = true;
  return locality_attack(cipher, plain, params, leak);
}

// Uniformly samples floor(rate * |target|) distinct ciphertext-plaintext
// pairs from the ground truth, deterministic in the seed.
inline LeakageSet sample_leakage(const GroundTruth& ground_truth,
                                 const BackupTrace& target, double rate,
                                 std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) {
    throw std::invalid_argument("leakage rate must lie in [0,1]");
  }
  const auto want = static_cast<std::size_t>(
      rate * static_cast<double>(target.size()));
  if (want > ground_truth.size()) {
    throw std::invalid_argument(
        "leakage rate asks for " + std::to_string(want) +
        " pairs but ground truth holds " + std::to_string(ground_truth.size()));
  }
  std::vector<InferredPair> all;
  all.reserve(ground_truth.size());
  for (const auto& [cfp, pfp] : ground_truth) all.push_back({cfp, pfp});
  std::sort(all.begin(), all.end(),
            [](const InferredPair& a, const InferredPair& b) {
              return a.cipher < b.cipher;
            });
  Rng rng(seed);
  for (std::size_t i = 0; i < want; ++i) {
    std::swap(all[i], all[i + rng.below(all.size() - i)]);
  }
  LeakageSet leak;
  leak.pairs.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(want));
  leak.leakage_rate = target.size() == 0
                          ? 0.0
                          : static_cast<double>(want) /
                                static_cast<double>(target.size());
  return leak;
}

// Report CSV: one row per inferred pair with its provenance.
inline void write_attack_report(const AttackResult& result,
                                std::ostream& out) {
  out << "cipher_fp,plain_fp,parent_fp,side,iteration\n";
  for (const auto& rec : result.provenance) {
    out << rec.pair.cipher.hex() << ',' << rec.pair.plain.hex() << ','
        << (rec.parent_cipher.empty() ? "-" : rec.parent_cipher.hex()) << ','
        << to_string(rec.side) << ',' << rec.iteration << '\n';
  }
}

}  // namespace dedupfreq
