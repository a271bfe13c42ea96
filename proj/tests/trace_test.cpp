#include "dedupfreq/trace.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "dedupfreq/rng.hpp"

namespace dedupfreq {
namespace {

Fingerprint fp_from_u64(std::uint64_t v, std::size_t width = 8) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return Fingerprint(std::span<const std::uint8_t>(buf, width));
}

TEST(ParseTrace, SingleRecord) {
  std::istringstream in("0a0b0c0d0e0f,4096\n");
  const auto trace = parse_trace(in, 6);
  ASSERT_EQ(trace.size(), 1u);
  EXPECT_EQ(trace[0].fp.hex(), "0a0b0c0d0e0f");
  EXPECT_EQ(trace[0].size, 4096u);
  EXPECT_EQ(trace.width(), 6u);
}

TEST(ParseTrace, EmptyStream) {
  std::istringstream in("");
  EXPECT_EQ(parse_trace(in, 6).size(), 0u);
}

TEST(ParseTrace, DuplicateFingerprintsCountSeparately) {
  // Three records, one fingerprint repeated: 3 chunks, 2 distinct.
  std::istringstream in(
      "00000001,100\n"
      "00000002,200\n"
      "00000001,100\n");
  const auto trace = parse_trace(in, 4);
  EXPECT_EQ(trace.size(), 3u);
  EXPECT_EQ(trace.unique_count(), 2u);
}

TEST(ParseTrace, MalformedHexNamesLine) {
  std::istringstream in("00000001,100\nzz000002,200\n");
  try {
    parse_trace(in, 4);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseTrace, InconsistentWidthRejected) {
  std::istringstream in("00000001,100\n000000000002,200\n");
  EXPECT_THROW(parse_trace(in, 4), ParseError);
}

TEST(ParseTrace, NonPositiveSizeRejected) {
  std::istringstream zero("00000001,0\n");
  EXPECT_THROW(parse_trace(zero, 4), ParseError);
  std::istringstream negative("00000001,-5\n");
  EXPECT_THROW(parse_trace(negative, 4), ParseError);
}

TEST(ParseTrace, WidthInferredFromFirstRecord) {
  std::istringstream in("0a0b0c0d0e0f,4096\n");
  EXPECT_EQ(parse_trace(in).width(), 6u);
}

TEST(WriteTrace, RoundTripSmall) {
  std::istringstream in(
      "00000001,100\n"
      "00000002,200\n"
      "00000001,100\n");
  const auto trace = parse_trace(in, 4);
  std::ostringstream out;
  write_trace(trace, out);
  std::istringstream back(out.str());
  EXPECT_EQ(parse_trace(back, 4), trace);
}

TEST(WriteTrace, EmptyTraceEmptyOutput) {
  std::ostringstream out;
  write_trace(BackupTrace{}, out);
  EXPECT_TRUE(out.str().empty());
}

TEST(WriteTrace, RoundTripLargeRandomByteIdentical) {
  Rng rng(20240811);
  BackupTrace trace;
  for (int i = 0; i < 10000; ++i) {
    trace.push_back({fp_from_u64(rng.next()), 1 + rng.below(1 << 20)});
  }
  std::ostringstream first;
  write_trace(trace, first);
  std::istringstream back(first.str());
  const auto reparsed = parse_trace(back, 8);
  EXPECT_EQ(reparsed, trace);
  std::ostringstream second;
  write_trace(reparsed, second);
  EXPECT_EQ(first.str(), second.str());
}

TEST(Fingerprint, OrderingAndMod) {
  const auto a = Fingerprint::from_hex("00000001");
  const auto b = Fingerprint::from_hex("00000002");
  EXPECT_LT(a, b);
  EXPECT_EQ(Fingerprint::from_hex("000000ff").mod(16), 15u);
  EXPECT_EQ(Fingerprint::from_hex("00000100").mod(256), 0u);
  EXPECT_THROW(Fingerprint::from_hex("0001"), ParseError);   // too narrow
  EXPECT_THROW(Fingerprint::from_hex("00011"), ParseError);  // odd length
}

TEST(Manifest, RoundTripResolvesRelativePaths) {
  const auto dir = std::filesystem::temp_directory_path() / "dfq_manifest_test";
  std::filesystem::create_directories(dir);
  write_manifest({"a.trace", "b.trace"}, dir / "manifest.txt");
  const auto paths = read_manifest(dir / "manifest.txt");
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0], dir / "a.trace");
  EXPECT_EQ(paths[1], dir / "b.trace");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dedupfreq
