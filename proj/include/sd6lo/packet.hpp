// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// 802.15.4 frames and the 6LoWPAN mesh/fragmentation headers, modeled by
// exact size accounting rather than bit-exact header compression.

#ifndef SD6LO_PACKET_HPP
#define SD6LO_PACKET_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <tuple>
#include <vector>

#include "sd6lo/types.hpp"

namespace sd6lo {

enum class DatagramKind : std::uint8_t { kUdpData, kSbi, kRplDio, kRplDao };

/// Accounting bucket for every transmitted frame.
enum class MessageCategory : std::uint8_t {
  kDio,
  kDao,
  kTopologyUpdate,
  kTableMissReq,
  kTableMissResp,
  kFlowPut,
  kOtherSbi,
  kData,
};
inline constexpr std::size_t kMessageCategoryCount = 8;
const char* category_name(MessageCategory c);

struct LinkLimits {
  std::size_t max_frame = 127;
  std::size_t mac_overhead = 11;  // 9 header + 2 FCS, short addressing
  std::size_t payload_window = 16;
};

inline constexpr std::size_t kMaxDatagramSize = 2047;
inline constexpr std::uint8_t kInitialHopsLeft = 14;

struct MeshHeader {
  static constexpr std::size_t kEncodedSize = 5;

  std::uint8_t hops_left = kInitialHopsLeft;
  ShortAddr originator;
  ShortAddr final_addr;

  bool operator==(const MeshHeader&) const = default;
};

struct FragHeader {
  std::uint16_t datagram_size = 0;
  std::uint16_t tag = 0;
  std::uint16_t offset_units = 0;  // multiples of 8 bytes
  bool is_first = false;

  std::size_t encoded_size() const { return is_first ? 4 : 5; }
  bool operator==(const FragHeader&) const = default;
};

struct Datagram {
  std::uint64_t id = 0;
  ShortAddr src;
  ShortAddr dst;
  DatagramKind kind = DatagramKind::kUdpData;
  MessageCategory category = MessageCategory::kData;
  std::uint16_t app_payload_len = 0;
  std::uint16_t compressed_header_len = 10;
  SimTime created_at = 0;
  /// Meaningful application bytes; the rest of app_payload_len is padding.
  std::vector<std::uint8_t> body;

  std::size_t compressed_total() const {
    return static_cast<std::size_t>(app_payload_len) + compressed_header_len;
  }
};

using DatagramPtr = std::shared_ptr<const Datagram>;

/// First `window` bytes of the datagram's application payload, zero padded
/// up to the payload length.
std::vector<std::uint8_t> payload_window_of(const Datagram& d, std::size_t window);

struct Frame {
  ShortAddr mac_src;
  ShortAddr mac_dst;
  std::optional<MeshHeader> mesh;
  std::optional<FragHeader> frag;
  std::uint16_t payload_len = 0;
  std::vector<std::uint8_t> payload_window;
  DatagramPtr datagram;
};

std::size_t on_air_bytes(const Frame& f, const LinkLimits& limits = {});

/// Per-frame payload capacities for a given mesh-header presence.
struct FragmentBudget {
  std::size_t whole;       // unfragmented payload budget
  std::size_t first;       // FRAG1 payload capacity, multiple of 8
  std::size_t subsequent;  // FRAGN payload capacity, multiple of 8
};
FragmentBudget fragment_budget(bool with_mesh, const LinkLimits& limits = {});
std::size_t fragment_count(std::size_t compressed_total, bool with_mesh,
                           const LinkLimits& limits = {});

/// Splits `d` into link frames. MAC addresses are left for the caller.
/// Throws Error(kDatagramTooLarge) above 2047 bytes.
std::vector<Frame> fragment(const DatagramPtr& d, const std::optional<MeshHeader>& mesh,
                            const LinkLimits& limits, std::uint16_t tag);

enum class ReassemblyStatus { kIncomplete, kComplete, kStale };

struct ReassemblyResult {
  ReassemblyStatus status = ReassemblyStatus::kIncomplete;
  DatagramPtr datagram;
  std::vector<std::uint8_t> payload_window;
};

class ReassemblyBuffer {
 public:
  explicit ReassemblyBuffer(SimTime timeout = seconds(8)) : timeout_(timeout) {}

  /// Throws Error(kInconsistentSize) when a fragment disagrees with the
  /// datagram size already recorded for its (originator, tag).
  ReassemblyResult add(const Frame& f, SimTime now);

  /// Drops buffers older than the timeout; returns how many were dropped.
  std::size_t purge(SimTime now);

  std::size_t pending() const { return pending_.size(); }

 private:
  using Key = std::tuple<std::uint16_t, std::uint16_t>;  // originator, tag

  struct Pending {
    std::uint16_t datagram_size = 0;
    SimTime started = 0;
    std::map<std::uint16_t, std::uint16_t> pieces;  // byte offset -> length
    DatagramPtr datagram;
    std::vector<std::uint8_t> payload_window;
  };

  SimTime timeout_;
  std::map<Key, Pending> pending_;
};

}  // namespace sd6lo

#endif  // SD6LO_PACKET_HPP
