#include "dedupfreq/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <vector>

#include "dedupfreq/attacks.hpp"
#include "test_util.hpp"

namespace dedupfreq {
namespace {

using testutil::cipher_fp;
using testutil::fig_cipher;
using testutil::fig_ground_truth;
using testutil::fig_plain;
using testutil::fp64;
using testutil::plain_fp;

TEST(InferenceRate, WorkedExampleIsFourFifths) {
  AttackParams p;
  p.pairs_per_iter = 1;
  p.queue_capacity = 1u << 30;
  const auto result = locality_attack(fig_cipher(), fig_plain(), p);
  EXPECT_DOUBLE_EQ(
      inference_rate(result.pairs, fig_ground_truth(), fig_cipher()), 0.8);
}

TEST(InferenceRate, EmptyResultIsZero) {
  EXPECT_DOUBLE_EQ(
      inference_rate(InferredPairSet{}, fig_ground_truth(), fig_cipher()),
      0.0);
}

TEST(InferenceRate, FullGroundTruthIsOne) {
  InferredPairSet t;
  for (int i = 1; i <= 5; ++i) t.try_add({cipher_fp(i), plain_fp(i)});
  EXPECT_DOUBLE_EQ(inference_rate(t, fig_ground_truth(), fig_cipher()), 1.0);
}

TEST(InferenceRate, UncoveredTargetFingerprintRejected) {
  GroundTruth partial;
  partial.emplace(cipher_fp(1), plain_fp(1));
  EXPECT_THROW(inference_rate(InferredPairSet{}, partial, fig_cipher()),
               std::invalid_argument);
}

TEST(InferenceRate, MonotoneUnderSetInclusion) {
  const auto gt = fig_ground_truth();
  InferredPairSet t;
  double previous = inference_rate(t, gt, fig_cipher());
  // Adding a wrong pair never raises the rate.
  t.try_add({cipher_fp(1), plain_fp(3)});
  double now = inference_rate(t, gt, fig_cipher());
  EXPECT_DOUBLE_EQ(now, previous);
  // Adding correct pairs never lowers it.
  for (int i = 2; i <= 5; ++i) {
    t.try_add({cipher_fp(i), plain_fp(i)});
    now = inference_rate(t, gt, fig_cipher());
    EXPECT_GE(now, previous);
    previous = now;
  }
}

TEST(StorageSaving, NoDuplicatesIsZero) {
  StoreReport r;
  r.logical_bytes = 1000;
  r.physical_bytes = 1000;
  EXPECT_DOUBLE_EQ(storage_saving(r), 0.0);
}

TEST(StorageSaving, EveryChunkDuplicatedOnceIsHalf) {
  StoreReport r;
  r.logical_bytes = 2000;
  r.physical_bytes = 1000;
  EXPECT_DOUBLE_EQ(storage_saving(r), 0.5);
}

TEST(StorageSaving, TenfoldDedupIsNinetyPercent) {
  StoreReport r;
  r.logical_bytes = 10000;
  r.physical_bytes = 1000;
  EXPECT_DOUBLE_EQ(storage_saving(r), 0.9);
}

TEST(StorageSaving, EmptyStoreRejected) {
  EXPECT_THROW(storage_saving(StoreReport{}), std::invalid_argument);
}

TEST(StorageSaving, SavingAndRatioAreConsistent) {
  StoreReport r;
  r.logical_bytes = 7777;
  r.physical_bytes = 1234;
  EXPECT_DOUBLE_EQ(storage_saving(r), 1.0 - 1.0 / r.dedup_ratio());
}

TEST(CompareRuns, SingleResultOneDataRow) {
  std::vector<EvalResult> results(1);
  results[0].attack = "locality";
  results[0].defense = "mle";
  results[0].aux_label = "s9";
  results[0].target_label = "s10";
  results[0].inference_rate = 0.25;
  std::ostringstream out;
  compare_runs(results, out);
  const auto text = out.str();
  EXPECT_NE(text.find("attack,defense,aux,target,"), std::string::npos);
  EXPECT_NE(text.find("locality,mle,s9,s10,0.25,"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(CompareRuns, SlidingWindowSweepRowCount) {
  // Ten snapshots, windows s in {1,2}: 9 + 8 = 17 cells.
  std::vector<EvalResult> results;
  for (const int s : {1, 2}) {
    for (int t = 0; t + s <= 9; ++t) {
      EvalResult r;
      r.attack = "locality";
      r.aux_label = "s" + std::to_string(t);
      r.target_label = "s" + std::to_string(t + s);
      results.push_back(r);
    }
  }
  ASSERT_EQ(results.size(), 17u);
  std::ostringstream out;
  compare_runs(results, out);
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 18);
}

TEST(CompareRuns, EmptyListHeaderOnly) {
  std::ostringstream out;
  compare_runs(std::vector<EvalResult>{}, out);
  EXPECT_EQ(out.str(),
            "attack,defense,aux,target,inference_rate,leakage_rate,"
            "storage_saving,dedup_ratio\n");
}

}  // namespace
}  // namespace dedupfreq
