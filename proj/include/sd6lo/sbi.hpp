// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Southbound interface: a CoAP-lite message layer (confirmable exchanges,
// duplicate detection, stop-and-wait retransmission), resource dispatch, and
// the CBOR payload schemas exchanged between nodes and the controller.
// The byte layouts are documented in docs/wire-format.md.

#ifndef SD6LO_SBI_HPP
#define SD6LO_SBI_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sd6lo/event_queue.hpp"
#include "sd6lo/flow.hpp"
#include "sd6lo/packet.hpp"

namespace sd6lo {

// ---------------------------------------------------------------------------
// Messages

enum class MsgType : std::uint8_t { kCon = 0, kNon = 1, kAck = 2, kRst = 3 };

enum class Code : std::uint8_t {
  kEmpty = 0x00,
  kGet = 0x01,
  kPost = 0x02,
  kPut = 0x03,
  kDelete = 0x04,
  kDeleted = 0x42,        // 2.02
  kChanged = 0x44,        // 2.04
  kContent = 0x45,        // 2.05
  kNotFound = 0x84,       // 4.04
  kInternalError = 0xA0,  // 5.00
};

const char* code_name(Code c);
inline bool is_success(Code c) { return (static_cast<std::uint8_t>(c) >> 5) == 2; }

struct SbiMessage {
  MsgType type = MsgType::kCon;
  Code code = Code::kEmpty;
  std::uint16_t message_id = 0;
  std::vector<std::uint8_t> token;  // 0..8 bytes
  std::vector<std::string> uri_path;
  std::vector<std::uint8_t> payload;

  bool operator==(const SbiMessage&) const = default;
};

std::size_t encoded_size(const SbiMessage& m);
std::vector<std::uint8_t> encode_message(const SbiMessage& m);
SbiMessage decode_message(std::span<const std::uint8_t> bytes);

/// Accounting category for a request or its response.
MessageCategory sbi_category(const std::vector<std::string>& uri_path, Code request_code,
                             bool is_response);

// ---------------------------------------------------------------------------
// Payload schemas

struct NeighborInfo {
  ShortAddr addr;
  std::int32_t rssi_dbm = 0;
  std::uint32_t etx_x128 = 128;

  bool operator==(const NeighborInfo&) const = default;
};

struct TopologyReport {
  ShortAddr node;
  std::uint32_t battery_level = 100;
  std::uint32_t update_period_s = 1200;
  std::vector<NeighborInfo> neighbors;

  bool operator==(const TopologyReport&) const = default;
};

struct KeyFeature {
  Field field = Field::kMeshFinal;
  std::uint16_t offset_bits = 0;
  std::uint8_t size_bits = 16;

  bool operator==(const KeyFeature&) const = default;
};
using KeyFeatureSpec = std::vector<KeyFeature>;

KeyFeatureSpec default_key_features();

struct TableMissReport {
  ShortAddr node;
  /// Key-feature values in spec order, or the whole frame when the key-feature spec is empty.
  std::variant<std::vector<std::uint64_t>, std::vector<std::uint8_t>> features;

  bool operator==(const TableMissReport&) const = default;
};

/// Configuration handed to a node in its first /network response.
struct NodeSettings {
  std::optional<std::uint32_t> update_period_s;
  std::optional<KeyFeatureSpec> key_features;
  std::optional<std::uint32_t> default_ttl_s;

  bool operator==(const NodeSettings&) const = default;
  bool empty() const { return !update_period_s && !key_features && !default_ttl_s; }
};

std::vector<std::uint8_t> encode_flow_entries(std::span<const FlowEntry> entries);
std::vector<FlowEntry> decode_flow_entries(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_topology_report(const TopologyReport& r);
TopologyReport decode_topology_report(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_neighbors(std::span<const NeighborInfo> n);
std::vector<NeighborInfo> decode_neighbors(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_key_features(const KeyFeatureSpec& spec);
KeyFeatureSpec decode_key_features(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_table_miss(const TableMissReport& r);
TableMissReport decode_table_miss(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_settings(const NodeSettings& s);
NodeSettings decode_settings(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_uint(std::uint64_t v);
std::uint64_t decode_uint(std::span<const std::uint8_t> bytes);

/// Serializes the matchable parts of a frame (addresses, headers, window).
std::vector<std::uint8_t> encode_frame_bytes(const Frame& f);
Frame decode_frame_bytes(std::span<const std::uint8_t> bytes);

/// Values of each key feature in `f`; absent fields read as 0.
std::vector<std::uint64_t> key_feature_values(const Frame& f, const KeyFeatureSpec& spec);

// ---------------------------------------------------------------------------
// Resources and exchanges

struct SbiResponse {
  Code code = Code::kContent;
  std::vector<std::uint8_t> payload;
};

using ResourceHandler = std::function<SbiResponse(ShortAddr src, const SbiMessage& request)>;

/// Routes requests by (uri path, method). Unknown paths and methods not
/// registered for a known path both answer 4.04.
class ResourceRouter {
 public:
  void add(const std::string& path, Code method, ResourceHandler h);
  SbiResponse dispatch(ShortAddr src, const SbiMessage& request) const;
  bool has(const std::string& path, Code method) const;

 private:
  std::map<std::pair<std::string, Code>, ResourceHandler> handlers_;
};

std::string join_path(const std::vector<std::string>& segments);
std::vector<std::string> split_path(const std::string& path);

enum class DedupVerdict { kFresh, kDuplicate };

/// Per-peer record of recently seen message ids, each remembered for
/// `lifetime` together with the response it produced.
class DedupCache {
 public:
  explicit DedupCache(SimTime lifetime = seconds(247)) : lifetime_(lifetime) {}

  DedupVerdict check(ShortAddr src, std::uint16_t message_id, SimTime now);
  void remember(ShortAddr src, std::uint16_t message_id, SimTime now, SbiMessage response);
  const SbiMessage* cached(ShortAddr src, std::uint16_t message_id) const;
  std::size_t size() const { return seen_.size(); }

 private:
  using Key = std::pair<std::uint16_t, std::uint16_t>;
  void purge(SimTime now);

  SimTime lifetime_;
  std::map<Key, std::pair<SimTime, SbiMessage>> seen_;
  std::deque<std::pair<SimTime, Key>> order_;
};

struct RetxParams {
  SimTime ack_timeout = seconds(2);
  int max_retransmit = 4;
};

struct ExchangeStats {
  std::uint64_t requests = 0;
  std::uint64_t transmissions = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t handler_invocations = 0;
  std::uint64_t duplicates = 0;
};

/// One CoAP-lite endpoint. Outgoing messages leave through `send`; timers are
/// events on the shared queue.
class SbiEndpoint {
 public:
  using SendFn = std::function<void(ShortAddr dst, const SbiMessage& m, MessageCategory c)>;
  /// Called with the piggybacked response, or nullopt on TransmissionTimeout.
  using ResponseFn = std::function<void(const std::optional<SbiMessage>& response)>;

  SbiEndpoint(EventQueue& events, SendFn send, RetxParams retx = {},
              SimTime dedup_lifetime = seconds(247));

  ResourceRouter& resources() { return router_; }

  /// Starts a confirmable exchange.
  void request(ShortAddr dst, Code code, std::vector<std::string> uri_path,
               std::vector<std::uint8_t> payload, ResponseFn on_done);

  void receive(ShortAddr src, const SbiMessage& m);

  const ExchangeStats& stats() const { return stats_; }
  std::size_t outstanding() const { return pending_.size(); }

 private:
  struct Pending {
    ShortAddr dst;
    SbiMessage msg;
    MessageCategory category;
    SimTime timeout;
    int retries_left;
    EventId timer;
    ResponseFn done;
  };

  void transmit(Pending& p);
  void on_timeout(std::uint16_t mid);

  EventQueue& events_;
  SendFn send_;
  RetxParams retx_;
  ResourceRouter router_;
  DedupCache dedup_;
  std::map<std::uint16_t, Pending> pending_;
  std::uint16_t next_mid_ = 1;
  std::uint16_t next_token_ = 1;
  ExchangeStats stats_;
};

}  // namespace sd6lo

#endif  // SD6LO_SBI_HPP
