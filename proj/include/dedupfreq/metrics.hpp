#pragma once

#include <ostream>
#include <span>
#include <string>
#include <unordered_set>

#include "dedupfreq/attacks.hpp"
#include "dedupfreq/store.hpp"
#include "dedupfreq/trace.hpp"

namespace dedupfreq {

// One experiment cell: an attack against one (defense, auxiliary, target)
// combination plus the matching storage figures.
struct EvalResult {
  std::string attack;
  std::string defense;
  std::string aux_label;
  std::string target_label;
  double inference_rate = 0.0;
  double leakage_rate = 0.0;
  double storage_saving = 0.0;
  double dedup_ratio = 1.0;
};

// Fraction of the target's unique ciphertext chunks whose inferred
// plaintext matches the ground truth. Judged per unique ciphertext
// fingerprint; duplicates in the trace count once.
inline double inference_rate(const InferredPairSet& inferred,
                             const GroundTruth& ground_truth,
                             const BackupTrace& target) {
  std::unordered_set<Fingerprint> seen;
  seen.reserve(target.size());
  std::size_t unique = 0;
  std::size_t correct = 0;
  for (const auto& c : target) {
    if (!seen.insert(c.fp).second) continue;
    ++unique;
    const auto it = ground_truth.find(c.fp);
    if (it == ground_truth.end()) {
      throw std::invalid_argument(
          "ground truth does not cover target fingerprint " + c.fp.hex());
    }
    const auto plain = inferred.plain_of(c.fp);
    if (plain && *plain == it->second) ++correct;
  }
  return unique == 0 ? 0.0
                     : static_cast<double>(correct) /
                           static_cast<double>(unique);
}

// 1 - physical/logical; undefined for an empty store.
inline double storage_saving(const StoreReport& report) {
  if (report.logical_bytes == 0) {
    throw std::invalid_argument("storage saving undefined for empty store");
  }
  return 1.0 - static_cast<double>(report.physical_bytes) /
                   static_cast<double>(report.logical_bytes);
}

// One CSV row per evaluated (attack, defense, auxiliary, target) cell.
inline void compare_runs(std::span<const EvalResult> results,
                         std::ostream& out) {
  out << "attack,defense,aux,target,inference_rate,leakage_rate,"
         "storage_saving,dedup_ratio\n";
  for (const auto& r : results) {
    out << r.attack << ',' << r.defense << ',' << r.aux_label << ','
        << r.target_label << ',' << r.inference_rate << ',' << r.leakage_rate
        << ',' << r.storage_saving << ',' << r.dedup_ratio << '\n';
  }
  if (!out) throw IoError("failed writing comparison CSV");
}

}  // namespace dedupfreq
