// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Centralized controller: global topology view from node reports, ETX
// shortest paths, and flow-entry synthesis and distribution. The handlers
// are plain functions of (graph, request, now); the simulation owns the
// message transport.

#ifndef SD6LO_CONTROLLER_HPP
#define SD6LO_CONTROLLER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sd6lo/flow.hpp"
#include "sd6lo/sbi.hpp"

namespace sd6lo {

struct GraphNode {
  std::uint32_t battery = 100;
  std::uint32_t update_period_s = 1200;
  SimTime last_report = 0;
  bool stale = false;
};

struct GraphEdge {
  std::uint32_t etx_x128 = 128;
  std::int32_t rssi_dbm = 0;
  SimTime last_seen = 0;
  bool stale = false;
};

struct MergeDiff {
  bool node_added = false;
  bool node_recovered = false;
  std::size_t edges_added = 0;
  std::size_t edges_changed = 0;  // metric changed or revived
  std::size_t edges_staled = 0;
  bool changed() const {
    return node_added || node_recovered || edges_added || edges_changed || edges_staled;
  }
};

struct ExpireSummary {
  std::size_t edges_removed = 0;
  std::vector<ShortAddr> nodes_staled;
};

/// Directed link-state view: an edge A->B exists because A reported B.
class TopologyGraph {
 public:
  using EdgeKey = std::pair<ShortAddr, ShortAddr>;

  MergeDiff merge_report(const TopologyReport& r, SimTime now);
  ExpireSummary expire(SimTime now);

  bool has_node(ShortAddr a) const { return nodes_.count(a) != 0; }
  bool node_usable(ShortAddr a, SimTime now) const;
  /// Usable when present, not stale, and fresher than twice the reporter's period.
  bool edge_usable(ShortAddr from, ShortAddr to, SimTime now) const;

  const std::map<ShortAddr, GraphNode>& nodes() const { return nodes_; }
  const std::map<EdgeKey, GraphEdge>& edges() const { return edges_; }

  /// Text snapshot, one line per node and edge, for debugging dumps.
  std::string dump(SimTime now) const;

 private:
  std::map<ShortAddr, GraphNode> nodes_;
  std::map<EdgeKey, GraphEdge> edges_;
};

enum class PathMetric : std::uint8_t { kHop, kEtx };

struct PathPolicy {
  PathMetric metric = PathMetric::kEtx;
  /// Lets an edge reported only by its far end stand in for a missing one.
  bool allow_reverse_edges = false;
};

struct Path {
  std::vector<ShortAddr> nodes;
  std::uint64_t cost = 0;
};

/// Minimum-cost path; among equal-cost paths the lexicographically smallest
/// address sequence. nullopt when unreachable.
std::optional<Path> compute_path(const TopologyGraph& g, ShortAddr src, ShortAddr dst, SimTime now,
                                 const PathPolicy& policy = {});

inline constexpr std::uint32_t kSynthesizedPriority = 50;

FlowEntry path_entry(ShortAddr final_addr, ShortAddr next_hop, std::uint32_t ttl_s);

/// Entries for each non-terminal node of `path` towards `final_addr`, plus
/// entries towards path[0] along the reversed path.
std::map<ShortAddr, std::vector<FlowEntry>> synthesize_entries(const std::vector<ShortAddr>& path,
                                                               ShortAddr final_addr, std::uint32_t ttl_s);
/// Same, with an explicitly computed reverse path (from final back to path[0]).
std::map<ShortAddr, std::vector<FlowEntry>> synthesize_entries(const std::vector<ShortAddr>& path,
                                                               ShortAddr final_addr, std::uint32_t ttl_s,
                                                               const std::vector<ShortAddr>& reverse_path);

struct ControllerConfig {
  PathPolicy policy;
  std::uint32_t default_ttl_s = 600;
  /// Configuration returned on a node's first report.
  NodeSettings settings;
  KeyFeatureSpec key_features = default_key_features();
};

struct FlowEngineResult {
  Code code = Code::kContent;
  std::vector<FlowEntry> response;
  std::map<ShortAddr, std::vector<FlowEntry>> pushes;
};

struct NetworkResult {
  Code code = Code::kChanged;
  std::optional<NodeSettings> settings;
  std::map<ShortAddr, std::vector<FlowEntry>> pushes;
};

struct ControllerStats {
  std::uint64_t reports = 0;
  std::uint64_t flow_requests = 0;
  std::uint64_t unreachable = 0;
  std::uint64_t entries_pushed = 0;
  std::uint64_t resyntheses = 0;
  std::uint64_t repairs = 0;
};

class Controller {
 public:
  explicit Controller(ControllerConfig cfg = {}) : cfg_(std::move(cfg)) {}

  NetworkResult handle_network_post(const TopologyReport& r, SimTime now);
  FlowEngineResult handle_flow_engine_post(const TableMissReport& r, SimTime now);
  std::vector<FlowEntry> handle_flow_engine_get(ShortAddr node, SimTime now) const;
  ExpireSummary expire(SimTime now) { return graph_.expire(now); }

  /// Registers /network POST and /flow-engine GET+POST; pushes go to `push`.
  void attach(SbiEndpoint& ep, std::function<SimTime()> clock,
              std::function<void(ShortAddr node, std::vector<FlowEntry> entries)> push);

  const TopologyGraph& graph() const { return graph_; }
  const ControllerConfig& config() const { return cfg_; }
  const ControllerStats& stats() const { return stats_; }

 private:
  struct Tracked {
    FlowEntry entry;
    SimTime expires_at;
  };
  using EntryKey = std::pair<std::uint32_t, std::vector<Rule>>;
  struct RuleLess {
    bool operator()(const EntryKey& a, const EntryKey& b) const;
  };
  using NodeEntries = std::map<EntryKey, Tracked, RuleLess>;

  /// Filters `candidates` down to entries not already known at the node,
  /// records them, and returns the new ones.
  std::vector<FlowEntry> track(ShortAddr node, const std::vector<FlowEntry>& candidates, SimTime now);
  /// Follows the installed next hops towards `final_addr`; the node list when
  /// every hop is still usable, nullopt otherwise.
  std::optional<std::vector<ShortAddr>> tree_chain(ShortAddr final_addr, ShortAddr from, SimTime now,
                                                   const PathPolicy& policy) const;
  /// Path from `from` to `final_addr` that joins the existing tree at the
  /// first node with a valid chain; records the new hops in the tree.
  std::optional<std::vector<ShortAddr>> route(ShortAddr from, ShortAddr final_addr, SimTime now,
                                              const PathPolicy& policy);
  void push_flow(ShortAddr orig, ShortAddr final_addr, ShortAddr requester, SimTime now,
                 std::vector<FlowEntry>* response, std::map<ShortAddr, std::vector<FlowEntry>>& pushes);
  std::uint32_t control_ttl(ShortAddr node) const;

  ControllerConfig cfg_;
  TopologyGraph graph_;
  std::map<ShortAddr, NodeEntries> synthesized_;
  std::set<std::pair<ShortAddr, ShortAddr>> flows_;  // (orig, final) data flows
  // Per destination: node -> next hop. Every installed entry for a
  // destination comes from this map, so the entries never form a loop.
  std::map<ShortAddr, std::map<ShortAddr, ShortAddr>> trees_;
  ControllerStats stats_;
};

}  // namespace sd6lo

#endif  // SD6LO_CONTROLLER_HPP
