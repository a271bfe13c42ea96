#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dedupfreq/errors.hpp"
#include "dedupfreq/fingerprint.hpp"

namespace dedupfreq {

struct ChunkRecord {
  Fingerprint fp;
  std::uint64_t size = 0;

  friend bool operator==(const ChunkRecord&, const ChunkRecord&) = default;
};

// One backup's chunk sequence in logical (pre-deduplication) order.
// Identical fingerprints may repeat; order is meaningful.
class BackupTrace {
 public:
  BackupTrace() = default;
  explicit BackupTrace(std::string label) : label_(std::move(label)) {}

  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  const std::vector<ChunkRecord>& chunks() const { return chunks_; }
  std::size_t size() const { return chunks_.size(); }
  bool empty() const { return chunks_.empty(); }
  const ChunkRecord& operator[](std::size_t i) const { return chunks_[i]; }

  auto begin() const { return chunks_.begin(); }
  auto end() const { return chunks_.end(); }

  void reserve(std::size_t n) { chunks_.reserve(n); }

  void push_back(ChunkRecord rec) {
    if (rec.size == 0) {
      throw std::invalid_argument("chunk size must be positive");
    }
    if (!chunks_.empty() && rec.fp.width() != width()) {
      throw std::invalid_argument("mixed fingerprint widths in one trace");
    }
    chunks_.push_back(std::move(rec));
  }

  // Fingerprint width shared by all records; 0 for an empty trace.
  std::size_t width() const {
    return chunks_.empty() ? 0 : chunks_.front().fp.width();
  }

  std::uint64_t total_bytes() const {
    std::uint64_t sum = 0;
    for (const auto& c : chunks_) sum += c.size;
    return sum;
  }

  std::size_t unique_count() const {
    std::unordered_set<Fingerprint> seen;
    seen.reserve(chunks_.size());
    for (const auto& c : chunks_) seen.insert(c.fp);
    return seen.size();
  }

  friend bool operator==(const BackupTrace& a, const BackupTrace& b) {
    return a.label_ == b.label_ && a.chunks_ == b.chunks_;
  }

 private:
  std::string label_;
  std::vector<ChunkRecord> chunks_;
};

// Parses line-oriented records `<lowercase hex fingerprint>,<decimal size>`.
// width 0 means "infer from the first record". Errors name the line number.
inline BackupTrace parse_trace(std::istream& in, std::size_t width = 0,
                               std::string label = {}) {
  BackupTrace trace(std::move(label));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError("trace line " + std::to_string(lineno) +
                       ": missing ',' separator");
    }
    const std::string_view hex(line.data(), comma);
    Fingerprint fp;
    try {
      fp = Fingerprint::from_hex(hex);
    } catch (const ParseError& e) {
      throw ParseError("trace line " + std::to_string(lineno) + ": " +
                       e.what());
    }
    if (width == 0) width = fp.width();
    if (fp.width() != width) {
      throw ParseError("trace line " + std::to_string(lineno) +
                       ": fingerprint width " + std::to_string(fp.width()) +
                       " differs from expected " + std::to_string(width));
    }
    std::uint64_t size = 0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    const auto [ptr, ec] = std::from_chars(first, last, size);
    if (ec != std::errc() || ptr != last || size == 0) {
      throw ParseError("trace line " + std::to_string(lineno) +
                       ": bad chunk size");
    }
    trace.push_back({fp, size});
  }
  return trace;
}

inline void write_trace(const BackupTrace& trace, std::ostream& out) {
  for (const auto& c : trace) {
    out << c.fp.hex() << ',' << c.size << '\n';
  }
  if (!out) throw IoError("failed writing trace stream");
}

inline BackupTrace load_trace(const std::filesystem::path& path,
                              std::size_t width = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  return parse_trace(in, width, path.stem().string());
}

inline void save_trace(const BackupTrace& trace,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create trace file: " + path.string());
  write_trace(trace, out);
}

// Corpus manifest: one trace-file path per line, chronological order.
// Relative paths are resolved against the manifest's directory.
inline std::vector<std::filesystem::path> read_manifest(
    const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest: " + manifest.string());
  std::vector<std::filesystem::path> paths;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::filesystem::path p(line);
    if (p.is_relative()) p = manifest.parent_path() / p;
    paths.push_back(std::move(p));
  }
  return paths;
}

inline void write_manifest(const std::vector<std::string>& entries,
                           const std::filesystem::path& manifest) {
  std::ofstream out(manifest);
  if (!out) throw IoError("cannot create manifest: " + manifest.string());
  for (const auto& e : entries) out << e << '\n';
}

}  // namespace dedupfreq
