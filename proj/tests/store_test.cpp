#include "dedupfreq/store.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "dedupfreq/defenses.hpp"
#include "dedupfreq/rng.hpp"
#include "dedupfreq/synthetic.hpp"
#include "test_util.hpp"

namespace dedupfreq {
namespace {

using testutil::fp64;

class StoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("dfq_store_" + std::to_string(counter_++));
    std::filesystem::remove_all(dir_);
  }

  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path dir_;
  static inline int counter_ = 0;
};

StoreParams tiny_params() {
  StoreParams p;
  p.container_size = 1200;  // two 600-byte chunks per container
  p.cache_capacity = 1 << 20;
  p.fp_metadata_size = 32;
  p.expected_fingerprints = 1 << 16;
  return p;
}

BackupTrace trace_of(std::initializer_list<std::uint64_t> ids,
                     std::uint64_t size = 600, std::string label = "b") {
  BackupTrace t(std::move(label));
  for (const auto id : ids) t.push_back({fp64(id), size});
  return t;
}

TEST_F(StoreTest, FirstBackupOfUniqueChunksTouchesNoIndexOrLoading) {
  DedupStore store(dir_, tiny_params());
  const auto report = store.write_backup(trace_of({1, 2, 3, 4, 5}, 600, "b0"));
  EXPECT_EQ(report.unique_chunks, 5u);
  EXPECT_EQ(report.duplicate_chunks, 0u);
  EXPECT_EQ(report.stats.index_bytes, 0u);
  EXPECT_EQ(report.stats.loading_bytes, 0u);
  EXPECT_EQ(report.stats.update_bytes, 5u * 32u);
  EXPECT_EQ(report.logical_bytes, 5u * 600u);
  EXPECT_EQ(report.physical_bytes, 5u * 600u);
}

TEST_F(StoreTest, RewritingIdenticalBackupAddsNoPhysicalBytes) {
  DedupStore store(dir_, tiny_params());
  store.write_backup(trace_of({1, 2, 3, 4}, 600, "b0"));
  const auto second = store.write_backup(trace_of({1, 2, 3, 4}, 600, "b1"));
  EXPECT_EQ(second.physical_bytes, 0u);
  EXPECT_EQ(second.unique_chunks, 0u);
  EXPECT_EQ(second.duplicate_chunks, 4u);
  // Containers [1,2] and [3,4]: chunks 1 and 3 go through the index and
  // container loading, chunks 2 and 4 then hit the warmed cache.
  EXPECT_EQ(second.stats.index_bytes, 2u * 32u);
  EXPECT_EQ(second.stats.loading_bytes, 2u * 2u * 32u);
  EXPECT_EQ(second.stats.update_bytes, 0u);
}

TEST_F(StoreTest, DuplicateWithinOpenContainerDetectedWithoutLoading) {
  auto params = tiny_params();
  params.container_size = 1 << 20;  // everything stays buffered
  DedupStore store(dir_, params);
  const auto report = store.write_backup(trace_of({7, 7}, 600, "b0"));
  EXPECT_EQ(report.unique_chunks, 1u);
  EXPECT_EQ(report.duplicate_chunks, 1u);
  EXPECT_EQ(report.physical_bytes, 600u);
  EXPECT_EQ(report.stats.index_bytes, 32u);   // lookup finds nothing on disk
  EXPECT_EQ(report.stats.loading_bytes, 0u);  // copy was never flushed
}

TEST_F(StoreTest, IndexCardinalityMatchesBruteForce) {
  SyntheticCorpusParams sp;
  sp.initial_file_count = 50;
  sp.initial_total_size = 3u << 20;
  sp.snapshots = 4;
  sp.mean_chunk_size = 4096;
  sp.rng_seed = 21;
  const auto corpus = generate_synthetic(sp);
  auto params = tiny_params();
  params.container_size = 64 * 1024;
  DedupStore store(dir_, params);
  std::unordered_set<Fingerprint> brute;
  for (const auto& t : corpus) {
    store.write_backup(t);
    for (const auto& c : t) brute.insert(c.fp);
  }
  EXPECT_EQ(store.index_size(), brute.size());
  EXPECT_EQ(store.report().unique_chunks, brute.size());
  // Store-level dedup ratio equals the trace-level brute-force ratio.
  std::uint64_t logical = 0, physical = 0;
  std::unordered_set<Fingerprint> seen;
  for (const auto& t : corpus) {
    for (const auto& c : t) {
      logical += c.size;
      if (seen.insert(c.fp).second) physical += c.size;
    }
  }
  EXPECT_EQ(store.report().logical_bytes, logical);
  EXPECT_EQ(store.report().physical_bytes, physical);
}

TEST_F(StoreTest, RestoreReturnsRecipeOrder) {
  DedupStore store(dir_, tiny_params());
  const auto trace = trace_of({4, 1, 3, 1, 2}, 600, "b0");
  store.write_backup(trace);
  std::vector<Fingerprint> recipe;
  for (const auto& c : trace) recipe.push_back(c.fp);
  const auto restored = store.restore(recipe, trace.label());
  EXPECT_EQ(restored, trace);
}

TEST_F(StoreTest, RestoreUnknownFingerprintIsIntegrityError) {
  DedupStore store(dir_, tiny_params());
  store.write_backup(trace_of({1, 2}, 600, "b0"));
  const std::vector<Fingerprint> recipe = {fp64(1), fp64(99)};
  try {
    store.restore(recipe);
    FAIL() << "expected IntegrityError";
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find(fp64(99).hex()), std::string::npos);
  }
}

TEST_F(StoreTest, EventLogReplayReproducesCounters) {
  SyntheticCorpusParams sp;
  sp.initial_file_count = 30;
  sp.initial_total_size = 2u << 20;
  sp.snapshots = 3;
  sp.mean_chunk_size = 4096;
  sp.rng_seed = 22;
  const auto corpus = generate_synthetic(sp);
  auto params = tiny_params();
  params.container_size = 32 * 1024;
  params.cache_capacity = 64 * 32;  // small cache to force loading traffic
  {
    DedupStore store(dir_, params, /*event_log=*/true);
    for (const auto& t : corpus) store.write_backup(t);
    std::ifstream events(dir_ / "events.log");
    const auto replayed = DedupStore::replay_events(events);
    EXPECT_EQ(replayed.update_bytes, store.report().stats.update_bytes);
    EXPECT_EQ(replayed.index_bytes, store.report().stats.index_bytes);
    EXPECT_EQ(replayed.loading_bytes, store.report().stats.loading_bytes);
    EXPECT_GT(replayed.loading_bytes, 0u);
  }
}

TEST_F(StoreTest, LargerCacheNeverIncreasesMetadataTraffic) {
  SyntheticCorpusParams sp;
  sp.initial_file_count = 40;
  sp.initial_total_size = 4u << 20;
  sp.snapshots = 5;
  sp.mean_chunk_size = 4096;
  sp.rng_seed = 23;
  const auto corpus = generate_synthetic(sp);

  const auto run = [&](std::uint64_t cache_bytes) {
    const auto dir = dir_ / ("cache_" + std::to_string(cache_bytes));
    auto params = tiny_params();
    params.container_size = 32 * 1024;
    params.cache_capacity = cache_bytes;
    DedupStore store(dir, params);
    for (const auto& t : corpus) store.write_backup(t);
    return store.report().stats;
  };

  const auto small = run(24 * 32);       // two dozen cached entries
  const auto large = run(1u << 24);      // effectively unbounded
  EXPECT_LT(large.total(), small.total());
  EXPECT_LT(large.loading_bytes, small.loading_bytes);
  EXPECT_EQ(large.update_bytes, small.update_bytes);
}

TEST_F(StoreTest, ReopenedStoreServesExistingChunks)
{
  const auto trace = trace_of({11, 12, 13}, 600, "b0");
  {
    DedupStore store(dir_, tiny_params());
    store.write_backup(trace);
  }
  DedupStore reopened(dir_, tiny_params());
  EXPECT_EQ(reopened.index_size(), 3u);
  std::vector<Fingerprint> recipe = {fp64(13), fp64(11)};
  const auto restored = reopened.restore(recipe);
  ASSERT_EQ(restored.size(), 2u);
  EXPECT_EQ(restored[0].fp, fp64(13));
  // A duplicate of an already-stored chunk is found via the reloaded index.
  const auto report = reopened.write_backup(trace_of({11}, 600, "b1"));
  EXPECT_EQ(report.duplicate_chunks, 1u);
  EXPECT_EQ(report.physical_bytes, 0u);
}

TEST_F(StoreTest, ReportCsvWritten) {
  DedupStore store(dir_, tiny_params());
  store.write_backup(trace_of({1, 2, 3}, 600, "b0"));
  store.write_backup(trace_of({1, 2, 3}, 600, "b1"));
  std::ifstream in(dir_ / "report.csv");
  ASSERT_TRUE(in.good());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "label,logical_bytes,physical_bytes,update_bytes,index_bytes,"
            "loading_bytes");
  std::string row0, row1;
  ASSERT_TRUE(std::getline(in, row0));
  ASSERT_TRUE(std::getline(in, row1));
  EXPECT_EQ(row0.substr(0, 3), "b0,");
  EXPECT_EQ(row1.substr(0, 3), "b1,");
}

TEST(BloomFilter, NoHitsBeforeInsert) {
  BloomFilter bloom(1000, 0.01, 7);
  EXPECT_FALSE(bloom.maybe_contains(fp64(1)));
}

TEST(BloomFilter, NoFalseNegatives) {
  BloomFilter bloom(20000, 0.01, 7);
  for (std::uint64_t i = 1; i <= 20000; ++i) bloom.insert(fp64(i));
  for (std::uint64_t i = 1; i <= 20000; ++i) {
    ASSERT_TRUE(bloom.maybe_contains(fp64(i))) << i;
  }
}

TEST(BloomFilter, EmpiricalFalsePositiveRateNearConfigured) {
  const std::size_t n = 50000;
  BloomFilter bloom(n, 0.01, 7);
  for (std::uint64_t i = 1; i <= n; ++i) bloom.insert(fp64(i));
  std::size_t false_positives = 0;
  const std::size_t probes = 50000;
  for (std::uint64_t i = 0; i < probes; ++i) {
    if (bloom.maybe_contains(fp64(1000000 + i))) ++false_positives;
  }
  const double fpr = static_cast<double>(false_positives) / probes;
  EXPECT_LE(fpr, 0.02);
}

TEST(StoreParamsTest, Validation) {
  StoreParams p;
  p.bloom_fp_rate = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace dedupfreq
