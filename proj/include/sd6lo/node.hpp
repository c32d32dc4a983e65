// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Per-node protocol stack. The SDN sub-layer sits under 6LoWPAN and forwards
// mesh-under frames through the flow table; the local controller keeps the
// bootstrap entries, reports topology and resolves table misses. RPL-lite
// (DIO only) provides the upward path in both modes; the baseline mode adds
// storing-mode DAOs and route-over forwarding.

#ifndef SD6LO_NODE_HPP
#define SD6LO_NODE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sd6lo/event_queue.hpp"
#include "sd6lo/flow.hpp"
#include "sd6lo/packet.hpp"
#include "sd6lo/params.hpp"
#include "sd6lo/rng.hpp"
#include "sd6lo/sbi.hpp"

namespace sd6lo {

// ---------------------------------------------------------------------------
// Neighbors and ETX

struct NeighborRecord {
  ShortAddr addr;
  std::int32_t rssi_dbm = 0;
  std::uint32_t etx_x128 = 128;
  SimTime last_heard = 0;
};

inline constexpr std::uint32_t kEtxUnit = 128;
inline constexpr std::uint32_t kEtxCap = 128 * 16;

/// etx <- ceil(0.9 etx + 0.1 (attempts x 128)), capped at 16 transmissions.
std::uint32_t etx_update(std::uint32_t etx_x128, int attempts);

class NeighborTable {
 public:
  /// Upserts the transmitter; returns true when the record is new.
  bool overhear(ShortAddr addr, std::int32_t rssi_dbm, SimTime now);
  /// Folds one unicast outcome into the ETX of a known neighbor.
  void record_attempts(ShortAddr addr, int attempts);
  /// Removes records not heard for longer than `max_age`.
  std::vector<ShortAddr> purge(SimTime now, SimTime max_age);

  const NeighborRecord* find(ShortAddr addr) const;
  std::uint32_t etx(ShortAddr addr) const;
  std::vector<NeighborInfo> snapshot() const;
  std::vector<ShortAddr> addresses() const;
  std::size_t size() const { return records_.size(); }

 private:
  std::map<ShortAddr, NeighborRecord> records_;
};

// ---------------------------------------------------------------------------
// RPL-lite

inline constexpr std::uint32_t kRootRank = 256;
inline constexpr std::uint32_t kInfiniteRank = 0xFFFF;

/// Interval arithmetic of a Trickle timer without suppression: one DIO per
/// interval, interval doubling from i_min up to i_min << doublings.
class Trickle {
 public:
  Trickle(SimTime i_min = seconds(4), int doublings = 8)
      : i_min_(i_min), i_max_(i_min << doublings), interval_(i_min) {}

  SimTime interval() const { return interval_; }
  SimTime i_max() const { return i_max_; }
  void reset() { interval_ = i_min_; }
  /// Fire point inside the current interval, uniform in [I/2, I).
  SimTime draw_fire_offset(Rng& rng) const {
    return interval_ / 2 + static_cast<SimTime>(rng.uniform_int(0, interval_ / 2 - 1));
  }
  void expire() { interval_ = std::min(interval_ * 2, i_max_); }

 private:
  SimTime i_min_;
  SimTime i_max_;
  SimTime interval_;
};

struct RplState {
  bool is_root = false;
  std::uint32_t rank = kInfiniteRank;
  std::optional<ShortAddr> parent;
  std::uint32_t parent_rank = kInfiniteRank;
};

enum class DioOutcome { kIgnored, kNoChange, kParentAdopted, kParentSwitched, kRankUpdated, kParentLost };

/// Processes one DIO: rank from the preferred parent is its rank plus the
/// link ETX; a different sender replaces the parent only when its path rank
/// plus `hysteresis` is below the current rank.
DioOutcome rpl_on_dio(RplState& s, ShortAddr sender, std::uint32_t sender_rank,
                      std::uint32_t etx_x128, std::uint32_t hysteresis = 192);

// ---------------------------------------------------------------------------
// Baseline routing table

class RoutingTable {
 public:
  explicit RoutingTable(std::size_t capacity = 40) : capacity_(capacity) {}

  enum class Result { kInserted, kRefreshed, kRejected };
  Result upsert(ShortAddr dst, ShortAddr next_hop, SimTime expires_at);
  std::optional<ShortAddr> next_hop(ShortAddr dst, SimTime now) const;
  std::size_t purge(SimTime now);
  std::size_t size() const { return routes_.size(); }
  std::size_t capacity() const { return capacity_; }

  struct Route {
    ShortAddr next_hop;
    SimTime expires_at;
  };
  const std::map<ShortAddr, Route>& routes() const { return routes_; }

 private:
  std::size_t capacity_;
  std::map<ShortAddr, Route> routes_;
};

// ---------------------------------------------------------------------------
// Bootstrap flow entries

inline constexpr std::uint32_t kOneHopPriority = 20;
inline constexpr std::uint32_t kControllerPathPriority = 50;
inline constexpr std::uint32_t kUpstreamPriority = 250;

FlowEntry one_hop_entry(ShortAddr neighbor, std::uint32_t ttl_s);
/// Carries traffic for the controller towards the preferred parent.
FlowEntry upstream_entry(ShortAddr parent, std::uint32_t ttl_s);
std::vector<FlowEntry> bootstrap_entries(std::optional<ShortAddr> parent,
                                         std::span<const ShortAddr> neighbors,
                                         std::uint32_t update_period_s);

// ---------------------------------------------------------------------------
// Node

// Application payload: the echo server returns the request body with the
// reply flag set, so the sender can match the pair.
struct AppBody {
  bool is_reply = false;
  std::uint32_t seq = 0;
  std::uint64_t request_id = 0;
};
inline constexpr std::size_t kAppBodySize = 13;
std::vector<std::uint8_t> encode_app_body(const AppBody& b);
std::optional<AppBody> decode_app_body(std::span<const std::uint8_t> bytes);
/// Echo of `request` sent back from its destination.
DatagramPtr make_echo_reply(const Datagram& request, std::uint64_t id, SimTime now);

enum class NodeRole : std::uint8_t { kSender, kForwarder, kBorderRouter };
const char* role_name(NodeRole r);

struct NodeConfig {
  ShortAddr addr;
  NodeRole role = NodeRole::kForwarder;
  /// Application destination for periodic traffic: a node address or the
  /// external server. Unset for nodes that generate no traffic.
  std::optional<ShortAddr> traffic_dst;
};

/// Services the surrounding simulation provides to a node.
class NodeEnv {
 public:
  virtual ~NodeEnv() = default;
  virtual EventQueue& events() = 0;
  virtual Rng& rng() = 0;
  virtual std::uint64_t next_datagram_id() = 0;
  /// Queues a frame at the node's MAC. For unicast, `done` receives the
  /// attempt count on success or 0 on failure; broadcast reports 1.
  virtual void mac_send(ShortAddr node, Frame f, std::function<void(int attempts)> done) = 0;
  /// Border router only: hands a datagram to the external network.
  virtual void external_send(DatagramPtr d) = 0;
  virtual void datagram_created(ShortAddr node, const Datagram& d) = 0;
  virtual void table_miss_requested(ShortAddr node) = 0;
  virtual void rtt_sample(ShortAddr node, ShortAddr peer, SimTime sent_at, SimTime rtt,
                          std::uint64_t request_id, std::uint64_t reply_id) = 0;
  virtual void diagnostic(ShortAddr node, const std::string& cause) = 0;
};

class Node {
 public:
  Node(NodeConfig cfg, const StackParams& params, NodeEnv& env);
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  /// Starts timers: trickle at the root, DAOs, application traffic.
  void start();

  /// A frame decoded at this node and addressed to it (or broadcast).
  void on_receive(const Frame& f);
  /// Any frame decoded at this node, addressed or not.
  void on_overhear(ShortAddr transmitter, std::int32_t rssi_dbm);
  /// Border router: a datagram arriving from the external network.
  void inject(DatagramPtr d);

  ShortAddr addr() const { return cfg_.addr; }
  const NodeConfig& config() const { return cfg_; }
  bool is_border_router() const { return cfg_.role == NodeRole::kBorderRouter; }
  const RplState& rpl() const { return rpl_; }
  std::optional<ShortAddr> dodag_root() const { return dodag_root_; }
  const NeighborTable& neighbors() const { return neighbors_; }
  const FlowTable& flow_table() const { return table_; }
  FlowTable& flow_table() { return table_; }
  const RoutingTable& routing_table() const { return routes_; }
  SbiEndpoint& sbi() { return sbi_; }
  std::uint32_t update_period_s() const { return update_period_s_; }
  const KeyFeatureSpec& key_features() const { return key_features_; }
  std::size_t miss_queue_size() const;
  std::uint64_t flow_lookups() const { return flow_lookups_; }

  /// Sends an application datagram (request) to `dst`.
  void send_app(ShortAddr dst);

 private:
  struct MissKey {
    std::vector<std::uint64_t> values;
    std::vector<std::uint8_t> frame_bytes;
    auto operator<=>(const MissKey&) const = default;
  };
  struct Buffered {
    Frame frame;
    bool at_origin;
  };
  struct PendingMiss {
    std::vector<Buffered> frames;
    bool outstanding = false;
  };

  // Datagram origination and delivery.
  DatagramPtr make_datagram(ShortAddr dst, DatagramKind kind, MessageCategory cat,
                            std::uint16_t app_len, std::vector<std::uint8_t> body);
  void originate(DatagramPtr d, ShortAddr mesh_orig);
  void deliver_up(DatagramPtr d);
  void handle_app(const DatagramPtr& d);
  void deliver_frame_up(const Frame& f);
  void send_unicast(Frame f, ShortAddr next_hop);
  void send_broadcast(Frame f);

  // SDN sub-layer.
  bool bypass(const Frame& f) const;
  void age_table();
  void sdn_forward(Frame f, bool at_origin, bool allow_miss = true);
  void handle_table_miss(Frame f, bool at_origin);
  void on_miss_response(const MissKey& key, const std::optional<SbiMessage>& resp);
  void sbi_send(ShortAddr dst, const SbiMessage& m, MessageCategory c);
  void register_resources();
  void install_upstream();
  void refresh_bootstrap();
  void schedule_report(SimTime delay);
  void send_report();
  void apply_settings(const NodeSettings& s);
  void neighbors_changed();

  // Route-over.
  void route_over(DatagramPtr d, bool at_origin);

  // RPL-lite.
  void trickle_start_interval();
  void send_dio();
  void trickle_reset();
  void on_dio(ShortAddr sender, std::uint32_t sender_rank, ShortAddr root);
  void on_parent_change();
  void schedule_dao(SimTime delay);
  void send_dao(ShortAddr target);
  void on_dao(ShortAddr child, ShortAddr target);

  // Traffic.
  void schedule_traffic(SimTime delay);
  void purge_neighbors();

  NodeConfig cfg_;
  const StackParams& p_;
  NodeEnv& env_;

  NeighborTable neighbors_;
  RplState rpl_;
  std::optional<ShortAddr> dodag_root_;
  Trickle trickle_;
  EventId trickle_fire_ = 0;
  EventId trickle_end_ = 0;
  bool trickle_running_ = false;

  FlowTable table_;
  SbiEndpoint sbi_;
  ReassemblyBuffer reassembly_;
  RoutingTable routes_;
  std::map<MissKey, PendingMiss> misses_;
  std::uint64_t flow_lookups_ = 0;

  std::uint32_t update_period_s_;
  KeyFeatureSpec key_features_;
  std::uint32_t default_ttl_s_;
  EventId report_timer_ = 0;
  bool report_scheduled_ = false;
  bool joined_ = false;
  SimTime last_report_at_ = -1;
  bool report_pending_change_ = false;
  SimTime last_tick_ = 0;

  std::uint16_t next_tag_ = 1;
  std::uint32_t next_app_seq_ = 1;
  struct Outstanding {
    SimTime sent_at;
    std::uint64_t datagram_id;
    ShortAddr dst;
  };
  std::map<std::uint32_t, Outstanding> app_outstanding_;
};

}  // namespace sd6lo

#endif  // SD6LO_NODE_HPP
