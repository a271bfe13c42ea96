#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dedupfreq/rng.hpp"
#include "dedupfreq/trace.hpp"

namespace dedupfreq {

// Parameters for the seeded backup-corpus generator. Snapshot 0 models an
// initial image; each later snapshot derives from the previous one by
// modifying a fraction of files and appending new data.
struct SyntheticCorpusParams {
  std::size_t initial_file_count = 500;
  std::uint64_t initial_total_size = 64ull << 20;
  std::size_t snapshots = 11;
  double file_pick_fraction = 0.02;
  double content_modify_fraction = 0.025;
  // Bytes of new files appended per derived snapshot. Unset means
  // initial_total_size / 110, keeping additions proportional to the image.
  std::optional<std::uint64_t> added_bytes_per_snapshot{};
  std::uint64_t mean_chunk_size = 8ull << 10;
  std::uint64_t rng_seed = 1;

  std::uint64_t added_bytes() const {
    return added_bytes_per_snapshot.value_or(initial_total_size / 110);
  }

  void validate() const {
    if (initial_file_count == 0) {
      throw std::invalid_argument("initial_file_count must be >= 1");
    }
    if (initial_total_size == 0) {
      throw std::invalid_argument("initial_total_size must be positive");
    }
    if (snapshots == 0) throw std::invalid_argument("snapshots must be >= 1");
    if (file_pick_fraction < 0.0 || file_pick_fraction >= 1.0 ||
        content_modify_fraction < 0.0 || content_modify_fraction >= 1.0) {
      throw std::invalid_argument("fractions must lie in [0,1)");
    }
    if (mean_chunk_size < 4) {
      throw std::invalid_argument("mean_chunk_size too small");
    }
  }
};

namespace detail {

// Workload texture of the generated image. Backup images carry a small set
// of shared multi-chunk sequences that recur throughout the data (shared
// libraries, format headers) with a skewed rank distribution, occasional
// runs of a repeated chunk, and whole duplicate files (copies within the
// image). Together these give the corpus the frequency skew and the
// repeated-adjacency structure that real backup traces exhibit.
inline constexpr std::size_t kSharedPoolSize = 256;
inline constexpr std::size_t kSharedSeqMinLen = 2;
inline constexpr std::size_t kSharedSeqMaxLen = 6;
inline constexpr double kSharedPoolProb = 0.025;
inline constexpr double kRepeatRunProb = 0.02;
inline constexpr double kDuplicateFileProb = 0.10;
inline constexpr double kPoolRankExponent = 1.5;
inline constexpr std::size_t kSyntheticFpWidth = 8;

class CorpusBuilder {
 public:
  explicit CorpusBuilder(const SyntheticCorpusParams& params)
      : params_(params), rng_(params.rng_seed) {
    pool_cdf_.reserve(kSharedPoolSize);
    double acc = 0.0;
    for (std::size_t k = 0; k < kSharedPoolSize; ++k) {
      acc += 1.0 / std::pow(static_cast<double>(k + 1), kPoolRankExponent);
      pool_cdf_.push_back(acc);
    }
    for (auto& w : pool_cdf_) w /= acc;
    pool_.resize(kSharedPoolSize);
    pool_refs_.resize(kSharedPoolSize);
    pool_usable_len_.assign(kSharedPoolSize, 0);
    for (std::size_t k = 0; k < kSharedPoolSize; ++k) {
      const std::size_t len =
          kSharedSeqMinLen +
          rng_.below(kSharedSeqMaxLen - kSharedSeqMinLen + 1);
      for (std::size_t j = 0; j < len; ++j) {
        pool_[k].push_back(fresh_chunk());
        member_index_.emplace(pool_[k].back().fp, std::pair{k, j});
      }
      pool_refs_[k].assign(len, 0);
      pool_usable_len_[k] = len;
    }
  }

  std::vector<BackupTrace> build() {
    const std::uint64_t base_file_size =
        std::max<std::uint64_t>(params_.mean_chunk_size,
                                params_.initial_total_size /
                                    params_.initial_file_count);
    std::uint64_t built = 0;
    while (built < params_.initial_total_size) {
      files_.push_back(next_file(base_file_size));
      built += bytes_of(files_.back());
    }
    std::vector<BackupTrace> corpus;
    corpus.reserve(params_.snapshots);
    corpus.push_back(emit_snapshot(0));
    for (std::size_t i = 1; i < params_.snapshots; ++i) {
      derive_next(base_file_size);
      corpus.push_back(emit_snapshot(i));
    }
    return corpus;
  }

 private:
  using FileChunks = std::vector<ChunkRecord>;

  std::uint64_t file_target(std::uint64_t base) {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                          base * rng_.range(0.5, 1.5)));
  }

  std::uint64_t draw_size() {
    const std::uint64_t lo = std::max<std::uint64_t>(1, params_.mean_chunk_size / 4);
    const std::uint64_t hi = 4 * params_.mean_chunk_size;
    const double scale = static_cast<double>(params_.mean_chunk_size - lo);
    const double extra = -std::log(1.0 - rng_.unit()) * scale;
    const auto size = lo + static_cast<std::uint64_t>(extra);
    return std::min(size, hi);
  }

  ChunkRecord fresh_chunk() {
    for (;;) {
      std::uint8_t raw[kSyntheticFpWidth];
      std::uint64_t v = rng_.next();
      for (std::size_t i = 0; i < kSyntheticFpWidth; ++i) {
        raw[i] = static_cast<std::uint8_t>(v >> (8 * i));
      }
      Fingerprint fp{std::span<const std::uint8_t>(raw, kSyntheticFpWidth)};
      if (used_.insert(fp).second) {
        return ChunkRecord{fp, draw_size()};
      }
    }
  }

  std::size_t draw_pool_index() {
    const double u = rng_.unit();
    const auto it = std::lower_bound(pool_cdf_.begin(), pool_cdf_.end(), u);
    return static_cast<std::size_t>(it - pool_cdf_.begin());
  }

  // Appends the next run of a file body: occasionally repeat the previous
  // chunk, occasionally splice in a prefix of a shared sequence, otherwise
  // emit one chunk of new content.
  void append_next(FileChunks& file) {
    const double u = rng_.unit();
    if (!file.empty() && u < kRepeatRunProb) {
      add_ref(file.back().fp);
      file.push_back(file.back());
      return;
    }
    if (u < kRepeatRunProb + kSharedPoolProb) {
      for (int tries = 0; tries < 64; ++tries) {
        const std::size_t k = draw_pool_index();
        if (pool_usable_len_[k] == 0) continue;
        // Geometric prefix length, clamped to the part of the sequence
        // still present in the parent snapshot.
        std::size_t len = 1;
        while (len < pool_usable_len_[k] && rng_.unit() < 0.5) ++len;
        for (std::size_t j = 0; j < len; ++j) {
          ++pool_refs_[k][j];
          file.push_back(pool_[k][j]);
        }
        return;
      }
    }
    file.push_back(fresh_chunk());
  }

  void add_ref(const Fingerprint& fp) {
    const auto it = member_index_.find(fp);
    if (it != member_index_.end()) {
      ++pool_refs_[it->second.first][it->second.second];
    }
  }

  FileChunks build_file(std::uint64_t target_bytes) {
    FileChunks file;
    std::uint64_t acc = 0;
    while (acc < target_bytes) {
      const std::size_t before = file.size();
      append_next(file);
      for (std::size_t i = before; i < file.size(); ++i) acc += file[i].size;
    }
    return file;
  }

  // New files are sometimes plain copies of existing ones, as in real
  // images where the same file sits in several directories.
  FileChunks next_file(std::uint64_t base_file_size) {
    if (!files_.empty() && rng_.unit() < kDuplicateFileProb) {
      const auto& source = files_[rng_.below(files_.size())];
      for (const auto& c : source) add_ref(c.fp);
      return source;
    }
    return build_file(file_target(base_file_size));
  }

  void release_refs(const FileChunks& file, std::size_t first,
                    std::size_t count) {
    for (std::size_t i = first; i < first + count; ++i) {
      const auto it = member_index_.find(file[i].fp);
      if (it == member_index_.end()) continue;
      auto& refs = pool_refs_[it->second.first][it->second.second];
      if (refs > 0) --refs;
    }
  }

  // Replace a contiguous run of chunks with fresh content of similar total
  // size. The replacement is re-chunked, so its chunk count usually differs
  // from the replaced run's, as content-defined chunking would after an edit.
  void modify_file(FileChunks& file) {
    if (file.empty() || params_.content_modify_fraction == 0.0) return;
    const std::size_t n = file.size();
    auto k = static_cast<std::size_t>(
        std::llround(params_.content_modify_fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    const std::size_t start = rng_.below(n - k + 1);
    std::uint64_t replaced = 0;
    for (std::size_t i = start; i < start + k; ++i) replaced += file[i].size;
    release_refs(file, start, k);

    const auto target = static_cast<std::uint64_t>(
        std::max(1.0, static_cast<double>(replaced) * rng_.range(0.8, 1.2)));
    FileChunks fresh_run;
    std::uint64_t acc = 0;
    while (acc < target) {
      fresh_run.push_back(fresh_chunk());
      acc += fresh_run.back().size;
    }
    file.erase(file.begin() + static_cast<std::ptrdiff_t>(start),
               file.begin() + static_cast<std::ptrdiff_t>(start + k));
    file.insert(file.begin() + static_cast<std::ptrdiff_t>(start),
                fresh_run.begin(), fresh_run.end());
  }

  void derive_next(std::uint64_t base_file_size) {
    // Only the prefix of a shared sequence still referenced by the parent
    // snapshot stays usable for new files; a chunk whose last reference was
    // modified away may not silently reappear in a later snapshot.
    for (std::size_t k = 0; k < pool_.size(); ++k) {
      std::size_t usable = 0;
      while (usable < pool_[k].size() && pool_refs_[k][usable] > 0) ++usable;
      pool_usable_len_[k] = usable;
    }
    std::size_t picks = 0;
    if (params_.file_pick_fraction > 0.0) {
      picks = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(
                 params_.file_pick_fraction *
                 static_cast<double>(files_.size()))));
      picks = std::min(picks, files_.size());
    }
    std::vector<std::size_t> order(files_.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < picks; ++i) {
      const std::size_t j = i + rng_.below(order.size() - i);
      std::swap(order[i], order[j]);
      modify_file(files_[order[i]]);
    }
    const std::uint64_t added = params_.added_bytes();
    std::uint64_t acc = 0;
    while (acc < added) {
      files_.push_back(next_file(base_file_size));
      acc += bytes_of(files_.back());
    }
  }

  static std::uint64_t bytes_of(const FileChunks& file) {
    std::uint64_t sum = 0;
    for (const auto& c : file) sum += c.size;
    return sum;
  }

  BackupTrace emit_snapshot(std::size_t index) const {
    BackupTrace trace("s" + std::to_string(index));
    std::size_t total = 0;
    for (const auto& f : files_) total += f.size();
    trace.reserve(total);
    for (const auto& f : files_) {
      for (const auto& c : f) trace.push_back(c);
    }
    return trace;
  }

  SyntheticCorpusParams params_;
  Rng rng_;
  std::vector<std::vector<ChunkRecord>> pool_;  // shared sequences
  std::vector<double> pool_cdf_;
  std::unordered_map<Fingerprint, std::pair<std::size_t, std::size_t>>
      member_index_;  // fp -> (sequence, position)
  std::vector<std::vector<std::uint64_t>> pool_refs_;
  std::vector<std::size_t> pool_usable_len_;
  std::unordered_set<Fingerprint> used_;
  std::vector<FileChunks> files_;
};

}  // namespace detail

// Generates the corpus. Pure function of params: the same seed yields a
// bit-identical sequence of snapshots.
inline std::vector<BackupTrace> generate_synthetic(
    const SyntheticCorpusParams& params) {
  params.validate();
  return detail::CorpusBuilder(params).build();
}

}  // namespace dedupfreq
