#pragma once

#include <stdexcept>
#include <string>

namespace dedupfreq {

// Malformed input data (trace files, manifests, serialized maps).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A stored object is missing or inconsistent (e.g. restore of an
// unknown fingerprint).
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure while persisting or loading state.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dedupfreq
