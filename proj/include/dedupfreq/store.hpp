#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dedupfreq/errors.hpp"
#include "dedupfreq/trace.hpp"

namespace dedupfreq {

struct StoreParams {
  std::uint64_t container_size = 4ull << 20;
  std::uint64_t cache_capacity = 512ull << 20;  // bytes of fingerprint metadata
  double bloom_fp_rate = 0.01;
  std::size_t bloom_hashes = 7;
  std::uint64_t fp_metadata_size = 32;
  std::uint64_t expected_fingerprints = 1ull << 20;  // Bloom sizing hint

  void validate() const {
    if (container_size == 0 || cache_capacity == 0 || fp_metadata_size == 0 ||
        expected_fingerprints == 0 || bloom_hashes == 0) {
      throw std::invalid_argument("store parameters must be positive");
    }
    if (bloom_fp_rate <= 0.0 || bloom_fp_rate >= 1.0) {
      throw std::invalid_argument("bloom_fp_rate must lie in (0,1)");
    }
  }
};

// Standard Bloom filter sized as m = ceil(-n ln p / (ln 2)^2) bits with k
// double-hashed probe positions. No false negatives.
class BloomFilter {
 public:
  BloomFilter(std::uint64_t expected_n, double fp_rate, std::size_t hashes)
      : nbits_(bits_for(expected_n, fp_rate)), k_(hashes) {
    bits_.assign((nbits_ + 63) / 64, 0);
  }

  static std::uint64_t bits_for(std::uint64_t n, double p) {
    const double ln2 = std::log(2.0);
    const double m = std::ceil(-static_cast<double>(n) * std::log(p) /
                               (ln2 * ln2));
    return std::max<std::uint64_t>(64, static_cast<std::uint64_t>(m));
  }

  void insert(const Fingerprint& fp) {
    const auto [h1, h2] = probe_basis(fp);
    for (std::size_t i = 0; i < k_; ++i) {
      const std::uint64_t bit = (h1 + i * h2) % nbits_;
      bits_[bit / 64] |= 1ull << (bit % 64);
    }
  }

  bool maybe_contains(const Fingerprint& fp) const {
    const auto [h1, h2] = probe_basis(fp);
    for (std::size_t i = 0; i < k_; ++i) {
      const std::uint64_t bit = (h1 + i * h2) % nbits_;
      if ((bits_[bit / 64] & 1ull << (bit % 64)) == 0) return false;
    }
    return true;
  }

  std::uint64_t bit_count() const { return nbits_; }

 private:
  static std::pair<std::uint64_t, std::uint64_t> probe_basis(
      const Fingerprint& fp) {
    std::uint64_t h1 = 0xcbf29ce484222325ull;
    std::uint64_t h2 = 0x84222325cbf29ce4ull;
    for (const auto b : fp.bytes()) {
      h1 = (h1 ^ b) * 0x100000001b3ull;
      h2 = (h2 ^ b) * 0x100000001b5ull;
    }
    return {h1, h2 | 1};
  }

  std::vector<std::uint64_t> bits_;
  std::uint64_t nbits_;
  std::size_t k_;
};

// In-memory fingerprint -> container id map with least-recently-used
// eviction. Capacity counts fingerprint-metadata entries.
class FingerprintCache {
 public:
  explicit FingerprintCache(std::size_t capacity)
      : capacity_(std::max<std::size_t>(1, capacity)) {}

  std::optional<std::uint32_t> get(const Fingerprint& fp) {
    const auto it = map_.find(fp);
    if (it == map_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
  }

  void put(const Fingerprint& fp, std::uint32_t container_id) {
    const auto it = map_.find(fp);
    if (it != map_.end()) {
      it->second->second = container_id;
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    if (map_.size() >= capacity_) {
      map_.erase(order_.back().first);
      order_.pop_back();
    }
    order_.emplace_front(fp, container_id);
    map_[fp] = order_.begin();
  }

  std::size_t size() const { return map_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::list<std::pair<Fingerprint, std::uint32_t>> order_;
  std::unordered_map<Fingerprint,
                     std::list<std::pair<Fingerprint, std::uint32_t>>::iterator>
      map_;
};

// Byte counters for the three on-disk metadata traffic categories.
struct MetadataAccessStats {
  std::uint64_t update_bytes = 0;   // new index entries written at flush
  std::uint64_t index_bytes = 0;    // on-disk index lookups
  std::uint64_t loading_bytes = 0;  // container fingerprints read into cache

  std::uint64_t total() const { return update_bytes + index_bytes + loading_bytes; }

  MetadataAccessStats operator-(const MetadataAccessStats& o) const {
    return {update_bytes - o.update_bytes, index_bytes - o.index_bytes,
            loading_bytes - o.loading_bytes};
  }
};

struct StoreReport {
  std::string label;
  std::uint64_t logical_bytes = 0;
  std::uint64_t physical_bytes = 0;
  std::uint64_t unique_chunks = 0;
  std::uint64_t duplicate_chunks = 0;
  MetadataAccessStats stats;

  double dedup_ratio() const {
    return physical_bytes == 0
               ? 1.0
               : static_cast<double>(logical_bytes) /
                     static_cast<double>(physical_bytes);
  }
};

// On-disk fingerprint index: a sorted base file plus an append log, with
// batched updates at container flush and periodic compaction. An in-memory
// mirror serves lookups; the disk traffic they would cost is accounted by
// the store.
class FingerprintIndex {
 public:
  explicit FingerprintIndex(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    load_file(dir_ / "base.txt");
    log_entries_ = load_file(dir_ / "log.txt");
    log_.open(dir_ / "log.txt", std::ios::app);
    if (!log_) throw IoError("cannot open index log in " + dir_.string());
  }

  std::optional<std::uint32_t> lookup(const Fingerprint& fp) const {
    const auto it = map_.find(fp);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void append_batch(
      std::span<const std::pair<Fingerprint, std::uint32_t>> entries) {
    for (const auto& [fp, cid] : entries) {
      map_.emplace(fp, cid);
      log_ << fp.hex() << ',' << cid << '\n';
    }
    log_.flush();
    if (!log_) throw IoError("failed appending to index log");
    log_entries_ += entries.size();
    if (log_entries_ >= kCompactThreshold) compact();
  }

  void compact() {
    std::vector<std::pair<Fingerprint, std::uint32_t>> rows(map_.begin(),
                                                            map_.end());
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto tmp = dir_ / "base.tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw IoError("cannot write index base file");
      for (const auto& [fp, cid] : rows) out << fp.hex() << ',' << cid << '\n';
    }
    std::filesystem::rename(tmp, dir_ / "base.txt");
    log_.close();
    log_.open(dir_ / "log.txt", std::ios::trunc);
    log_entries_ = 0;
  }

  std::size_t size() const { return map_.size(); }

  auto begin() const { return map_.begin(); }
  auto end() const { return map_.end(); }

 private:
  static constexpr std::size_t kCompactThreshold = 1 << 16;

  std::size_t load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return 0;
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) {
        throw ParseError("bad index line in " + path.string());
      }
      map_.insert_or_assign(
          Fingerprint::from_hex(std::string_view(line).substr(0, comma)),
          static_cast<std::uint32_t>(
              std::stoul(line.substr(comma + 1))));
      ++n;
    }
    return n;
  }

  std::filesystem::path dir_;
  std::unordered_map<Fingerprint, std::uint32_t> map_;
  std::ofstream log_;
  std::size_t log_entries_ = 0;
};

// DDFS-style deduplicating store simulator. Write path per chunk:
//   S1  fingerprint cache hit        -> duplicate, no disk traffic
//   S2  Bloom miss                   -> unique, buffer into open container
//   S3  Bloom hit                    -> on-disk index lookup (index access)
//   S4  index hit                    -> load owning container's fingerprints
//                                       into the cache (loading access)
// Containers flush when the next chunk would overflow them and at backup
// end; index updates are batched at flush (update access). Chunk payloads
// are not materialized; physical size is computed from chunk sizes.
class DedupStore {
 public:
  DedupStore(std::filesystem::path dir, StoreParams params,
             bool event_log = false)
      : dir_(std::move(dir)),
        params_(validated(params)),
        bloom_(params.expected_fingerprints, params.bloom_fp_rate,
               params.bloom_hashes),
        cache_(static_cast<std::size_t>(params.cache_capacity /
                                        params.fp_metadata_size)),
        index_(dir_ / "index") {
    std::filesystem::create_directories(dir_ / "containers");
    if (event_log) {
      events_.open(dir_ / "events.log", std::ios::app);
      if (!events_) throw IoError("cannot open event log in " + dir_.string());
    }
    load_containers();
    for (const auto& [fp, cid] : index_) bloom_.insert(fp);
  }

  StoreReport write_backup(const BackupTrace& trace) {
    const StoreReport before = cumulative_;
    for (const auto& c : trace) {
      cumulative_.logical_bytes += c.size;
      if (cache_.get(c.fp)) {  // S1
        ++cumulative_.duplicate_chunks;
        continue;
      }
      if (!bloom_.maybe_contains(c.fp)) {  // S2
        store_unique(c);
        continue;
      }
      // S3: the Bloom filter may report a false positive.
      cumulative_.stats.index_bytes += params_.fp_metadata_size;
      log_event("index", c.fp.hex(), params_.fp_metadata_size);
      if (const auto cid = index_.lookup(c.fp)) {  // S4
        load_container(*cid);
        ++cumulative_.duplicate_chunks;
      } else if (buffer_set_.contains(c.fp)) {
        // Copy already sits in the open container buffer; it has no index
        // entry yet, so the lookup above went to disk and found nothing.
        ++cumulative_.duplicate_chunks;
      } else {
        store_unique(c);
      }
    }
    flush_container();
    if (events_.is_open()) events_.flush();
    StoreReport delta;
    delta.label = trace.label();
    delta.logical_bytes = cumulative_.logical_bytes - before.logical_bytes;
    delta.physical_bytes = cumulative_.physical_bytes - before.physical_bytes;
    delta.unique_chunks = cumulative_.unique_chunks - before.unique_chunks;
    delta.duplicate_chunks =
        cumulative_.duplicate_chunks - before.duplicate_chunks;
    delta.stats = cumulative_.stats - before.stats;
    per_backup_.push_back(delta);
    write_report_file();
    return delta;
  }

  // Fetches chunks from on-disk containers in recipe order.
  BackupTrace restore(std::span<const Fingerprint> recipe,
                      std::string label = {}) const {
    BackupTrace out(std::move(label));
    out.reserve(recipe.size());
    std::unordered_map<std::uint32_t,
                       std::unordered_map<Fingerprint, std::uint64_t>>
        loaded;
    for (const auto& fp : recipe) {
      const auto cid = index_.lookup(fp);
      if (!cid) {
        throw IntegrityError("fingerprint not stored: " + fp.hex());
      }
      auto it = loaded.find(*cid);
      if (it == loaded.end()) {
        it = loaded.emplace(*cid, read_container(*cid)).first;
      }
      const auto entry = it->second.find(fp);
      if (entry == it->second.end()) {
        throw IntegrityError("container " + std::to_string(*cid) +
                             " misses fingerprint " + fp.hex());
      }
      out.push_back({fp, entry->second});
    }
    return out;
  }

  const StoreReport& report() const { return cumulative_; }
  const std::vector<StoreReport>& per_backup() const { return per_backup_; }
  std::size_t index_size() const { return index_.size(); }
  const BloomFilter& bloom() const { return bloom_; }

  void write_report_csv(std::ostream& out) const {
    out << "label,logical_bytes,physical_bytes,update_bytes,index_bytes,"
           "loading_bytes\n";
    for (const auto& row : per_backup_) {
      out << row.label << ',' << row.logical_bytes << ','
          << row.physical_bytes << ',' << row.stats.update_bytes << ','
          << row.stats.index_bytes << ',' << row.stats.loading_bytes << '\n';
    }
  }

  // Recomputes stats from an event log; lets audits check that every
  // counter increment corresponds to one logged disk touch.
  static MetadataAccessStats replay_events(std::istream& in) {
    MetadataAccessStats stats;
    std::string kind;
    while (in >> kind) {
      if (kind == "index") {
        std::string fp;
        std::uint64_t bytes;
        in >> fp >> bytes;
        stats.index_bytes += bytes;
      } else if (kind == "update") {
        std::string fp;
        std::uint64_t bytes;
        in >> fp >> bytes;
        stats.update_bytes += bytes;
      } else if (kind == "load") {
        std::uint64_t cid, entries, bytes;
        in >> cid >> entries >> bytes;
        stats.loading_bytes += bytes;
      } else {
        throw ParseError("unknown event kind: " + kind);
      }
    }
    return stats;
  }

 private:
  struct ContainerMeta {
    std::vector<std::pair<Fingerprint, std::uint64_t>> entries;
  };

  static StoreParams validated(StoreParams params) {
    params.validate();
    return params;
  }

  void store_unique(const ChunkRecord& c) {
    cumulative_.physical_bytes += c.size;
    ++cumulative_.unique_chunks;
    bloom_.insert(c.fp);
    if (!buffer_.empty() && buffer_bytes_ + c.size > params_.container_size) {
      flush_container();
    }
    buffer_.emplace_back(c.fp, c.size);
    buffer_set_.insert(c.fp);
    buffer_bytes_ += c.size;
  }

  void flush_container() {
    if (buffer_.empty()) return;
    const auto cid = static_cast<std::uint32_t>(containers_.size());
    write_container(cid, buffer_);
    std::vector<std::pair<Fingerprint, std::uint32_t>> batch;
    batch.reserve(buffer_.size());
    for (const auto& [fp, size] : buffer_) {
      batch.emplace_back(fp, cid);
      cumulative_.stats.update_bytes += params_.fp_metadata_size;
      log_event("update", fp.hex(), params_.fp_metadata_size);
    }
    index_.append_batch(batch);
    containers_.push_back(ContainerMeta{std::move(buffer_)});
    buffer_ = {};
    buffer_set_.clear();
    buffer_bytes_ = 0;
  }

  void load_container(std::uint32_t cid) {
    const auto& entries = containers_.at(cid).entries;
    const std::uint64_t bytes =
        params_.fp_metadata_size * static_cast<std::uint64_t>(entries.size());
    cumulative_.stats.loading_bytes += bytes;
    if (events_.is_open()) {
      events_ << "load " << cid << ' ' << entries.size() << ' ' << bytes
              << '\n';
    }
    for (const auto& [fp, size] : entries) cache_.put(fp, cid);
  }

  void log_event(const char* kind, const std::string& fp,
                 std::uint64_t bytes) {
    if (events_.is_open()) events_ << kind << ' ' << fp << ' ' << bytes << '\n';
  }

  std::filesystem::path container_path(std::uint32_t cid) const {
    char name[32];
    std::snprintf(name, sizeof(name), "c%08u.cont", cid);
    return dir_ / "containers" / name;
  }

  void write_container(
      std::uint32_t cid,
      const std::vector<std::pair<Fingerprint, std::uint64_t>>& entries) {
    std::ofstream out(container_path(cid), std::ios::binary);
    if (!out) throw IoError("cannot create container file");
    const std::uint32_t count = static_cast<std::uint32_t>(entries.size());
    const std::uint8_t width =
        static_cast<std::uint8_t>(entries.front().first.width());
    out.write("DFQC", 4);
    write_u32(out, cid);
    out.put(static_cast<char>(width));
    write_u32(out, count);
    for (const auto& [fp, size] : entries) {
      out.write(reinterpret_cast<const char*>(fp.bytes().data()), width);
      write_u64(out, size);
    }
    if (!out) throw IoError("failed writing container file");
  }

  std::unordered_map<Fingerprint, std::uint64_t> read_container(
      std::uint32_t cid) const {
    const auto entries = read_container_entries(container_path(cid));
    std::unordered_map<Fingerprint, std::uint64_t> map;
    map.reserve(entries.size());
    for (const auto& [fp, size] : entries) map.emplace(fp, size);
    return map;
  }

  static std::vector<std::pair<Fingerprint, std::uint64_t>>
  read_container_entries(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open container file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != "DFQC") {
      throw IntegrityError("bad container magic in " + path.string());
    }
    read_u32(in);  // container id, implied by the file name
    const int width = in.get();
    const std::uint32_t count = read_u32(in);
    std::vector<std::pair<Fingerprint, std::uint64_t>> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint8_t buf[Fingerprint::kMaxWidth];
      in.read(reinterpret_cast<char*>(buf), width);
      const std::uint64_t size = read_u64(in);
      if (!in) throw IntegrityError("truncated container " + path.string());
      entries.emplace_back(
          Fingerprint(std::span<const std::uint8_t>(buf,
                                                    static_cast<std::size_t>(width))),
          size);
    }
    return entries;
  }

  void load_containers() {
    for (std::uint32_t cid = 0;; ++cid) {
      const auto path = container_path(cid);
      if (!std::filesystem::exists(path)) break;
      containers_.push_back(ContainerMeta{read_container_entries(path)});
    }
  }

  void write_report_file() const {
    std::ofstream out(dir_ / "report.csv");
    if (!out) throw IoError("cannot write report.csv");
    write_report_csv(out);
  }

  static void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>(v >> (8 * i));
    out.write(buf, 4);
  }

  static void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>(v >> (8 * i));
    out.write(buf, 8);
  }

  static std::uint32_t read_u32(std::istream& in) {
    char buf[4];
    in.read(buf, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[i]))
           << (8 * i);
    }
    return v;
  }

  static std::uint64_t read_u64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[i]))
           << (8 * i);
    }
    return v;
  }

  std::filesystem::path dir_;
  StoreParams params_;
  BloomFilter bloom_;
  FingerprintCache cache_;
  FingerprintIndex index_;
  std::ofstream events_;

  std::vector<ContainerMeta> containers_;
  std::vector<std::pair<Fingerprint, std::uint64_t>> buffer_;
  std::unordered_set<Fingerprint> buffer_set_;
  std::uint64_t buffer_bytes_ = 0;

  StoreReport cumulative_;
  std::vector<StoreReport> per_backup_;
};

}  // namespace dedupfreq
