// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SD6LO_TYPES_HPP
#define SD6LO_TYPES_HPP

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sd6lo {

/// Simulated time in microseconds.
using SimTime = std::int64_t;

inline constexpr SimTime kMicrosPerMilli = 1'000;
inline constexpr SimTime kMicrosPerSecond = 1'000'000;

inline SimTime from_seconds(double s) { return static_cast<SimTime>(std::llround(s * 1e6)); }
inline constexpr SimTime seconds(std::int64_t s) { return s * kMicrosPerSecond; }
inline constexpr SimTime millis(std::int64_t ms) { return ms * kMicrosPerMilli; }
inline constexpr double to_seconds(SimTime t) { return static_cast<double>(t) / 1e6; }

/// 16-bit IEEE 802.15.4 short address. Node ids map directly onto it.
struct ShortAddr {
  std::uint16_t value = 0;

  constexpr auto operator<=>(const ShortAddr&) const = default;
  constexpr bool is_broadcast() const { return value == 0xFFFF; }
};

inline constexpr ShortAddr kBroadcastAddr{0xFFFF};
/// Mesh address owned by the border router on behalf of the SDN controller.
inline constexpr ShortAddr kControllerAddr{0xFFFE};
/// Stand-in address for the UDP echo server beyond the border router.
inline constexpr ShortAddr kExternalServerAddr{0xFFFD};
/// Highest address usable by a node in a scenario.
inline constexpr std::uint16_t kMaxNodeAddr = 0xFFEF;

std::string to_string(ShortAddr a);

enum class Errc {
  kDatagramTooLarge,
  kInconsistentSize,
  kFieldAbsent,
  kWindowOutOfRange,
  kMalformedPayload,
  kTransmissionTimeout,
  kConfigError,
  kParseError,
  kValidationError,
  kIoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sd6lo

#endif  // SD6LO_TYPES_HPP
