#include "dedupfreq/synthetic.hpp"

#include <gtest/gtest.h>

#include <unordered_set>

namespace dedupfreq {
namespace {

SyntheticCorpusParams small_params() {
  SyntheticCorpusParams p;
  p.initial_file_count = 100;
  p.initial_total_size = 4ull << 20;
  p.snapshots = 5;
  p.mean_chunk_size = 4096;
  p.rng_seed = 42;
  return p;
}

std::uint64_t unique_bytes(const std::vector<BackupTrace>& corpus) {
  std::unordered_set<Fingerprint> seen;
  std::uint64_t bytes = 0;
  for (const auto& t : corpus) {
    for (const auto& c : t) {
      if (seen.insert(c.fp).second) bytes += c.size;
    }
  }
  return bytes;
}

TEST(Synthetic, SingleSnapshotIsJustTheInitialImage) {
  auto p = small_params();
  p.snapshots = 1;
  const auto corpus = generate_synthetic(p);
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_GE(corpus[0].total_bytes(), p.initial_total_size);
  EXPECT_EQ(corpus[0].label(), "s0");
}

TEST(Synthetic, DeterministicInSeed) {
  const auto a = generate_synthetic(small_params());
  const auto b = generate_synthetic(small_params());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Synthetic, DifferentSeedsDiffer) {
  auto p = small_params();
  const auto a = generate_synthetic(p);
  p.rng_seed = 43;
  const auto b = generate_synthetic(p);
  EXPECT_NE(a[0], b[0]);
}

TEST(Synthetic, IdentityMutationKeepsSnapshotsEqual) {
  auto p = small_params();
  p.file_pick_fraction = 0.0;
  p.added_bytes_per_snapshot = 0;
  const auto corpus = generate_synthetic(p);
  ASSERT_EQ(corpus.size(), 5u);
  for (std::size_t i = 1; i < corpus.size(); ++i) {
    EXPECT_EQ(corpus[i].chunks(), corpus[0].chunks());
  }
}

TEST(Synthetic, DefaultParamsReachTargetDedupRatio) {
  auto p = small_params();
  p.snapshots = 11;  // ten derived snapshots
  const auto corpus = generate_synthetic(p);
  std::uint64_t logical = 0;
  for (const auto& t : corpus) logical += t.total_bytes();
  const double ratio =
      static_cast<double>(logical) / static_cast<double>(unique_bytes(corpus));
  EXPECT_GE(ratio, 7.0);
  EXPECT_LE(ratio, 13.0);
}

TEST(Synthetic, DerivedChunksComeFromParentOrAreFresh) {
  const auto corpus = generate_synthetic(small_params());
  std::unordered_set<Fingerprint> prior;
  std::unordered_set<Fingerprint> parent;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i > 0) {
      for (const auto& c : corpus[i]) {
        const bool in_parent = parent.contains(c.fp);
        const bool seen_before = prior.contains(c.fp);
        EXPECT_TRUE(in_parent || !seen_before)
            << "chunk " << c.fp.hex() << " reappeared in snapshot " << i
            << " without being in its parent";
      }
    }
    parent.clear();
    for (const auto& c : corpus[i]) {
      parent.insert(c.fp);
      prior.insert(c.fp);
    }
  }
}

TEST(Synthetic, SameFingerprintAlwaysSameSize) {
  const auto corpus = generate_synthetic(small_params());
  std::unordered_map<Fingerprint, std::uint64_t> sizes;
  for (const auto& t : corpus) {
    for (const auto& c : t) {
      const auto [it, fresh] = sizes.emplace(c.fp, c.size);
      if (!fresh) EXPECT_EQ(it->second, c.size);
    }
  }
}

TEST(Synthetic, AddedBytesGrowLaterSnapshots) {
  auto p = small_params();
  p.file_pick_fraction = 0.0;
  p.added_bytes_per_snapshot = 256 * 1024;
  const auto corpus = generate_synthetic(p);
  EXPECT_GE(corpus.back().total_bytes(),
            corpus.front().total_bytes() + 4 * 256 * 1024);
}

TEST(Synthetic, ValidatesParams) {
  auto p = small_params();
  p.file_pick_fraction = 1.0;
  EXPECT_THROW(generate_synthetic(p), std::invalid_argument);
  p = small_params();
  p.snapshots = 0;
  EXPECT_THROW(generate_synthetic(p), std::invalid_argument);
}

}  // namespace
}  // namespace dedupfreq
