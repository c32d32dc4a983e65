// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Canonical CBOR subset: unsigned and negative integers, byte strings,
// arrays and maps, all definite-length with shortest argument encodings.
// The reader rejects anything else, so decode/encode round-trips are
// byte-identical.

#ifndef SD6LO_CBOR_HPP
#define SD6LO_CBOR_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sd6lo::cbor {

enum class Major : std::uint8_t {
  kUnsigned = 0,
  kNegative = 1,
  kBytes = 2,
  kArray = 4,
  kMap = 5,
};

class Writer {
 public:
  void uint(std::uint64_t v) { head(Major::kUnsigned, v); }
  void sint(std::int64_t v);
  void bytes(std::span<const std::uint8_t> b);
  void array(std::size_t n) { head(Major::kArray, n); }
  void map(std::size_t n) { head(Major::kMap, n); }

  const std::vector<std::uint8_t>& data() const { return out_; }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void head(Major m, std::uint64_t arg);
  std::vector<std::uint8_t> out_;
};

/// Throws Error(kMalformedPayload) on any deviation from the subset.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  Major peek() const;
  std::uint64_t uint();
  std::int64_t sint();
  std::vector<std::uint8_t> bytes();
  std::size_t array();
  std::size_t map();

  bool done() const { return pos_ == in_.size(); }
  /// Requires that every input byte was consumed.
  void finish() const;

 private:
  std::uint64_t head(Major expected);
  std::uint64_t head_any(Major& major);

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace sd6lo::cbor

#endif  // SD6LO_CBOR_HPP
