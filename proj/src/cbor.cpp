// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/cbor.hpp"

#include <limits>
#include <string>

#include "sd6lo/types.hpp"

namespace sd6lo::cbor {
namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(Errc::kMalformedPayload, "malformed CBOR: " + why);
}

}  // namespace

void Writer::head(Major m, std::uint64_t arg) {
  const auto mt = static_cast<std::uint8_t>(static_cast<std::uint8_t>(m) << 5);
  if (arg < 24) {
    out_.push_back(static_cast<std::uint8_t>(mt | arg));
    return;
  }
  int len;
  std::uint8_t ai;
  if (arg <= 0xFF) {
    len = 1, ai = 24;
  } else if (arg <= 0xFFFF) {
    len = 2, ai = 25;
  } else if (arg <= 0xFFFFFFFFull) {
    len = 4, ai = 26;
  } else {
    len = 8, ai = 27;
  }
  out_.push_back(static_cast<std::uint8_t>(mt | ai));
  for (int i = len - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(arg >> (8 * i)));
}

void Writer::sint(std::int64_t v) {
  if (v >= 0) {
    head(Major::kUnsigned, static_cast<std::uint64_t>(v));
  } else {
    head(Major::kNegative, static_cast<std::uint64_t>(-(v + 1)));
  }
}

void Writer::bytes(std::span<const std::uint8_t> b) {
  head(Major::kBytes, b.size());
  out_.insert(out_.end(), b.begin(), b.end());
}

std::uint64_t Reader::head_any(Major& major) {
  if (pos_ >= in_.size()) malformed("truncated input");
  const std::uint8_t ib = in_[pos_++];
  const std::uint8_t mt = ib >> 5;
  const std::uint8_t ai = ib & 0x1F;
  if (mt == 3 || mt > 5) malformed("unsupported major type " + std::to_string(mt));
  major = static_cast<Major>(mt);
  if (ai < 24) return ai;
  int len;
  switch (ai) {
    case 24: len = 1; break;
    case 25: len = 2; break;
    case 26: len = 4; break;
    case 27: len = 8; break;
    default: malformed("reserved or indefinite length");
  }
  if (in_.size() - pos_ < static_cast<std::size_t>(len)) malformed("truncated argument");
  std::uint64_t v = 0;
  for (int i = 0; i < len; ++i) v = (v << 8) | in_[pos_++];
  const std::uint64_t floor = len == 1 ? 24 : len == 2 ? 0x100 : len == 4 ? 0x10000 : 0x100000000ull;
  if (v < floor) malformed("non-shortest integer encoding");
  return v;
}

std::uint64_t Reader::head(Major expected) {
  Major m;
  const std::uint64_t v = head_any(m);
  if (m != expected) {
    malformed("expected major type " + std::to_string(static_cast<int>(expected)) + ", got " +
              std::to_string(static_cast<int>(m)));
  }
  return v;
}

Major Reader::peek() const {
  if (pos_ >= in_.size()) malformed("truncated input");
  const std::uint8_t mt = in_[pos_] >> 5;
  if (mt == 3 || mt > 5) malformed("unsupported major type " + std::to_string(mt));
  return static_cast<Major>(mt);
}

std::uint64_t Reader::uint() { return head(Major::kUnsigned); }

std::int64_t Reader::sint() {
  Major m;
  const std::uint64_t v = head_any(m);
  constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  if (v > kMax) malformed("integer out of range");
  if (m == Major::kUnsigned) return static_cast<std::int64_t>(v);
  if (m == Major::kNegative) return -1 - static_cast<std::int64_t>(v);
  malformed("expected integer");
}

std::vector<std::uint8_t> Reader::bytes() {
  const std::uint64_t n = head(Major::kBytes);
  if (in_.size() - pos_ < n) malformed("truncated byte string");
  std::vector<std::uint8_t> out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

std::size_t Reader::array() {
  const std::uint64_t n = head(Major::kArray);
  if (n > in_.size() - pos_) malformed("array longer than input");
  return static_cast<std::size_t>(n);
}

std::size_t Reader::map() {
  const std::uint64_t n = head(Major::kMap);
  if (n > in_.size() - pos_) malformed("map longer than input");
  return static_cast<std::size_t>(n);
}

void Reader::finish() const {
  if (!done()) malformed(std::to_string(in_.size() - pos_) + " trailing bytes");
}

}  // namespace sd6lo::cbor
