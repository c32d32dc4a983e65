// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/node.hpp"

#include <algorithm>
#include <utility>

namespace sd6lo {

// ---------------------------------------------------------------------------
// Neighbors

std::uint32_t etx_update(std::uint32_t etx_x128, int attempts) {
  const std::uint64_t num = 9ull * etx_x128 + 128ull * static_cast<std::uint64_t>(std::max(attempts, 1));
  const auto next = static_cast<std::uint32_t>((num + 9) / 10);
  return std::clamp(next, kEtxUnit, kEtxCap);
}

bool NeighborTable::overhear(ShortAddr addr, std::int32_t rssi_dbm, SimTime now) {
  auto [it, inserted] = records_.try_emplace(addr);
  if (inserted) it->second.addr = addr;
  it->second.rssi_dbm = rssi_dbm;
  it->second.last_heard = now;
  return inserted;
}

void NeighborTable::record_attempts(ShortAddr addr, int attempts) {
  auto it = records_.find(addr);
  if (it != records_.end()) it->second.etx_x128 = etx_update(it->second.etx_x128, attempts);
}

std::vector<ShortAddr> NeighborTable::purge(SimTime now, SimTime max_age) {
  std::vector<ShortAddr> gone;
  for (auto it = records_.begin(); it != records_.end();) {
    if (now - it->second.last_heard > max_age) {
      gone.push_back(it->first);
      it = records_.erase(it);
    } else {
      ++it;
    }
  }
  return gone;
}

const NeighborRecord* NeighborTable::find(ShortAddr addr) const {
  auto it = records_.find(addr);
  return it == records_.end() ? nullptr : &it->second;
}

std::uint32_t NeighborTable::etx(ShortAddr addr) const {
  const auto* r = find(addr);
  return r ? r->etx_x128 : kEtxUnit;
}

std::vector<NeighborInfo> NeighborTable::snapshot() const {
  std::vector<NeighborInfo> out;
  out.reserve(records_.size());
  for (const auto& [a, r] : records_) out.push_back({a, r.rssi_dbm, r.etx_x128});
  return out;
}

std::vector<ShortAddr> NeighborTable::addresses() const {
  std::vector<ShortAddr> out;
  for (const auto& [a, r] : records_) out.push_back(a);
  return out;
}

// ---------------------------------------------------------------------------
// RPL-lite

DioOutcome rpl_on_dio(RplState& s, ShortAddr sender, std::uint32_t sender_rank,
                      std::uint32_t etx_x128, std::uint32_t hysteresis) {
  if (s.is_root) return DioOutcome::kIgnored;
  if (s.parent && *s.parent == sender) {
    if (sender_rank >= kInfiniteRank) {
      s.parent.reset();
      s.rank = kInfiniteRank;
      s.parent_rank = kInfiniteRank;
      return DioOutcome::kParentLost;
    }
    s.parent_rank = sender_rank;
    const std::uint32_t rank = std::min(sender_rank + etx_x128, kInfiniteRank - 1);
    if (rank == s.rank) return DioOutcome::kNoChange;
    s.rank = rank;
    return DioOutcome::kRankUpdated;
  }
  if (sender_rank >= kInfiniteRank || sender_rank >= s.rank) return DioOutcome::kIgnored;
  const std::uint32_t candidate = sender_rank + etx_x128;
  if (!s.parent) {
    s.parent = sender;
    s.parent_rank = sender_rank;
    s.rank = std::min(candidate, kInfiniteRank - 1);
    return DioOutcome::kParentAdopted;
  }
  if (candidate + hysteresis < s.rank) {
    s.parent = sender;
    s.parent_rank = sender_rank;
    s.rank = candidate;
    return DioOutcome::kParentSwitched;
  }
  return DioOutcome::kNoChange;
}

// ---------------------------------------------------------------------------
// Routing table

RoutingTable::Result RoutingTable::upsert(ShortAddr dst, ShortAddr next_hop, SimTime expires_at) {
  auto it = routes_.find(dst);
  if (it != routes_.end()) {
    it->second = {next_hop, expires_at};
    return Result::kRefreshed;
  }
  if (routes_.size() >= capacity_) return Result::kRejected;
  routes_.emplace(dst, Route{next_hop, expires_at});
  return Result::kInserted;
}

std::optional<ShortAddr> RoutingTable::next_hop(ShortAddr dst, SimTime now) const {
  auto it = routes_.find(dst);
  if (it == routes_.end() || it->second.expires_at <= now) return std::nullopt;
  return it->second.next_hop;
}

std::size_t RoutingTable::purge(SimTime now) {
  return std::erase_if(routes_, [now](const auto& kv) { return kv.second.expires_at <= now; });
}

// ---------------------------------------------------------------------------
// Bootstrap entries

FlowEntry one_hop_entry(ShortAddr neighbor, std::uint32_t ttl_s) {
  FlowEntry e;
  e.priority = kOneHopPriority;
  e.rules = {Rule{Field::kMeshFinal, 0, 16, Op::kEq, neighbor.value}};
  e.actions = {Action::decrement(Field::kMeshHopsLeft, 1), Action::forward(neighbor)};
  e.ttl_s = ttl_s;
  return e;
}

FlowEntry upstream_entry(ShortAddr parent, std::uint32_t ttl_s) {
  FlowEntry e;
  e.priority = kUpstreamPriority;
  e.rules = {Rule{Field::kMeshFinal, 0, 16, Op::kEq, kControllerAddr.value}};
  e.actions = {Action::decrement(Field::kMeshHopsLeft, 1), Action::forward(parent)};
  e.ttl_s = ttl_s;
  return e;
}

std::vector<FlowEntry> bootstrap_entries(std::optional<ShortAddr> parent,
                                         std::span<const ShortAddr> neighbors,
                                         std::uint32_t update_period_s) {
  std::vector<FlowEntry> out;
  for (ShortAddr n : neighbors) out.push_back(one_hop_entry(n, 2 * update_period_s));
  if (parent) out.push_back(upstream_entry(*parent, 2 * update_period_s));
  return out;
}

// ---------------------------------------------------------------------------
// Application payload

std::vector<std::uint8_t> encode_app_body(const AppBody& b) {
  std::vector<std::uint8_t> out(kAppBodySize);
  out[0] = b.is_reply ? 1 : 0;
  for (int i = 0; i < 4; ++i) out[1 + i] = static_cast<std::uint8_t>(b.seq >> (24 - 8 * i));
  for (int i = 0; i < 8; ++i) out[5 + i] = static_cast<std::uint8_t>(b.request_id >> (56 - 8 * i));
  return out;
}

std::optional<AppBody> decode_app_body(std::span<const std::uint8_t> in) {
  if (in.size() < kAppBodySize || in[0] > 1) return std::nullopt;
  AppBody b;
  b.is_reply = in[0] == 1;
  for (int i = 0; i < 4; ++i) b.seq = (b.seq << 8) | in[1 + i];
  for (int i = 0; i < 8; ++i) b.request_id = (b.request_id << 8) | in[5 + i];
  return b;
}

DatagramPtr make_echo_reply(const Datagram& request, std::uint64_t id, SimTime now) {
  auto d = std::make_shared<Datagram>(request);
  d->id = id;
  d->src = request.dst;
  d->dst = request.src;
  d->created_at = now;
  if (!d->body.empty()) d->body[0] = 1;
  return d;
}

const char* role_name(NodeRole r) {
  switch (r) {
    case NodeRole::kSender: return "sender";
    case NodeRole::kForwarder: return "forwarder";
    case NodeRole::kBorderRouter: return "border_router";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Node

Node::Node(NodeConfig cfg, const StackParams& params, NodeEnv& env)
    : cfg_(cfg),
      p_(params),
      env_(env),
      trickle_(from_seconds(params.rpl.trickle_imin_s), params.rpl.trickle_doublings),
      table_(params.sdn.flow_table_capacity),
      sbi_(env.events(), [this](ShortAddr dst, const SbiMessage& m, MessageCategory c) { sbi_send(dst, m, c); },
           params.retx),
      reassembly_(params.reassembly_timeout),
      routes_(params.rpl.routing_capacity),
      update_period_s_(params.sdn.update_period_s),
      key_features_(params.sdn.key_features),
      default_ttl_s_(params.sdn.default_ttl_s) {
  if (p_.mode == StackMode::kSdn) register_resources();
}

void Node::start() {
  Rng& rng = env_.rng();
  if (is_border_router()) {
    rpl_.is_root = true;
    rpl_.rank = kRootRank;
    dodag_root_ = cfg_.addr;
    joined_ = true;
    trickle_start_interval();
    trickle_running_ = true;
    if (p_.mode == StackMode::kSdn) {
      schedule_report(from_seconds(rng.uniform(0.0, p_.sdn.first_report_delay_max_s)));
    }
  }
  if (p_.mode == StackMode::kRplBaseline && !is_border_router()) {
    schedule_dao(from_seconds(rng.uniform(0.0, p_.rpl.dao_period_s)));
  }
  if (cfg_.traffic_dst) {
    const double period = rng.uniform(p_.traffic.period_min_s, p_.traffic.period_max_s);
    schedule_traffic(from_seconds(rng.uniform(0.0, period)));
  }
}

std::size_t Node::miss_queue_size() const {
  std::size_t n = 0;
  for (const auto& [k, m] : misses_) n += m.frames.size();
  return n;
}

// --- datagrams --------------------------------------------------------------

DatagramPtr Node::make_datagram(ShortAddr dst, DatagramKind kind, MessageCategory cat,
                                std::uint16_t app_len, std::vector<std::uint8_t> body) {
  auto d = std::make_shared<Datagram>();
  d->id = env_.next_datagram_id();
  d->src = cfg_.addr;
  d->dst = dst;
  d->kind = kind;
  d->category = cat;
  d->app_payload_len = app_len;
  d->compressed_header_len = p_.compressed_header_len;
  d->created_at = env_.events().now();
  d->body = std::move(body);
  env_.datagram_created(cfg_.addr, *d);
  return d;
}

void Node::originate(DatagramPtr d, ShortAddr mesh_orig) {
  if (d->kind == DatagramKind::kRplDio) {
    for (auto& f : fragment(d, std::nullopt, p_.limits, next_tag_++)) send_broadcast(std::move(f));
    return;
  }
  if (d->kind == DatagramKind::kRplDao) {
    if (!rpl_.parent) return;
    for (auto& f : fragment(d, std::nullopt, p_.limits, next_tag_++)) send_unicast(std::move(f), *rpl_.parent);
    return;
  }
  if (p_.mode == StackMode::kRplBaseline) {
    route_over(std::move(d), true);
    return;
  }
  // Mesh-under: the final link address is the IP destination itself, the
  // border router for the external server, or the controller's address.
  ShortAddr final_addr = d->dst;
  if (d->dst == kExternalServerAddr) {
    if (!dodag_root_) {
      env_.diagnostic(cfg_.addr, "NoBorderRouter");
      return;
    }
    final_addr = *dodag_root_;
  }
  MeshHeader mesh{kInitialHopsLeft, mesh_orig, final_addr};
  for (auto& f : fragment(d, mesh, p_.limits, next_tag_++)) {
    f.mac_src = cfg_.addr;
    sdn_forward(std::move(f), true);
  }
}

void Node::inject(DatagramPtr d) {
  if (p_.mode == StackMode::kRplBaseline) {
    route_over(std::move(d), true);
    return;
  }
  originate(d, d->src == kControllerAddr ? kControllerAddr : cfg_.addr);
}

void Node::deliver_frame_up(const Frame& f) {
  ReassemblyResult r;
  try {
    r = reassembly_.add(f, env_.events().now());
  } catch (const Error& e) {
    env_.diagnostic(cfg_.addr, "InconsistentSize");
    return;
  }
  if (r.status == ReassemblyStatus::kStale) env_.diagnostic(cfg_.addr, "ReassemblyStale");
  if (r.status == ReassemblyStatus::kComplete) deliver_up(r.datagram);
}

void Node::deliver_up(DatagramPtr d) {
  if (is_border_router() && (d->dst == kExternalServerAddr || d->dst == kControllerAddr)) {
    env_.external_send(std::move(d));
    return;
  }
  if (d->dst != cfg_.addr) {
    env_.diagnostic(cfg_.addr, "Misaddressed");
    return;
  }
  switch (d->kind) {
    case DatagramKind::kSbi: {
      SbiMessage m;
      try {
        m = decode_message(d->body);
      } catch (const Error&) {
        env_.diagnostic(cfg_.addr, "MalformedSbi");
        return;
      }
      sbi_.receive(d->src, m);
      return;
    }
    case DatagramKind::kUdpData:
      handle_app(d);
      return;
    case DatagramKind::kRplDio:
    case DatagramKind::kRplDao:
      return;
  }
}

void Node::handle_app(const DatagramPtr& d) {
  auto body = decode_app_body(d->body);
  if (!body) {
    env_.diagnostic(cfg_.addr, "MalformedApp");
    return;
  }
  const SimTime now = env_.events().now();
  if (!body->is_reply) {
    DatagramPtr reply = make_echo_reply(*d, env_.next_datagram_id(), now);
    env_.datagram_created(cfg_.addr, *reply);
    originate(std::move(reply), cfg_.addr);
    return;
  }
  auto it = app_outstanding_.find(body->seq);
  if (it == app_outstanding_.end() || it->second.datagram_id != body->request_id) {
    env_.diagnostic(cfg_.addr, "UnmatchedReply");
    return;
  }
  env_.rtt_sample(cfg_.addr, d->src, it->second.sent_at, now - it->second.sent_at, body->request_id, d->id);
  app_outstanding_.erase(it);
}

void Node::send_unicast(Frame f, ShortAddr next_hop) {
  f.mac_src = cfg_.addr;
  f.mac_dst = next_hop;
  const int fail_attempts = p_.mac.max_attempts + 1;
  env_.mac_send(cfg_.addr, std::move(f), [this, next_hop, fail_attempts](int attempts) {
    neighbors_.record_attempts(next_hop, attempts > 0 ? attempts : fail_attempts);
    if (attempts == 0) env_.diagnostic(cfg_.addr, "MacFailed");
  });
}

void Node::send_broadcast(Frame f) {
  f.mac_src = cfg_.addr;
  f.mac_dst = kBroadcastAddr;
  env_.mac_send(cfg_.addr, std::move(f), [](int) {});
}

void Node::on_receive(const Frame& f) {
  if (!f.datagram) return;
  if (f.datagram->kind == DatagramKind::kRplDio) {
    const auto& b = f.datagram->body;
    if (b.size() >= 4) {
      on_dio(f.mac_src, static_cast<std::uint32_t>((b[0] << 8) | b[1]),
             ShortAddr{static_cast<std::uint16_t>((b[2] << 8) | b[3])});
    }
    return;
  }
  if (p_.mode == StackMode::kSdn) {
    if (f.mesh) {
      sdn_forward(f, false);
    } else {
      deliver_frame_up(f);
    }
    return;
  }
  ReassemblyResult r;
  try {
    r = reassembly_.add(f, env_.events().now());
  } catch (const Error&) {
    env_.diagnostic(cfg_.addr, "InconsistentSize");
    return;
  }
  if (r.status == ReassemblyStatus::kStale) env_.diagnostic(cfg_.addr, "ReassemblyStale");
  if (r.status != ReassemblyStatus::kComplete) return;
  const DatagramPtr& d = r.datagram;
  if (d->kind == DatagramKind::kRplDao) {
    if (d->body.size() >= 2) on_dao(f.mac_src, ShortAddr{static_cast<std::uint16_t>((d->body[0] << 8) | d->body[1])});
    return;
  }
  route_over(d, false);
}

void Node::on_overhear(ShortAddr transmitter, std::int32_t rssi_dbm) {
  const bool fresh = neighbors_.overhear(transmitter, rssi_dbm, env_.events().now());
  if (fresh && p_.mode == StackMode::kSdn) {
    age_table();
    table_.install(one_hop_entry(transmitter, 2 * update_period_s_), env_.events().now());
    neighbors_changed();
  }
}

void Node::purge_neighbors() {
  const auto gone = neighbors_.purge(env_.events().now(), seconds(2 * static_cast<std::int64_t>(update_period_s_)));
  if (gone.empty()) return;
  if (rpl_.parent && std::find(gone.begin(), gone.end(), *rpl_.parent) != gone.end()) {
    rpl_.parent.reset();
    rpl_.rank = kInfiniteRank;
    rpl_.parent_rank = kInfiniteRank;
    trickle_reset();
  }
  neighbors_changed();
}

// --- SDN sub-layer ----------------------------------------------------------

bool Node::bypass(const Frame& f) const {
  if (f.datagram && (f.datagram->kind == DatagramKind::kRplDio || f.datagram->kind == DatagramKind::kRplDao)) {
    return true;
  }
  if (!f.mesh) return false;
  const ShortAddr fin = f.mesh->final_addr;
  if (fin == cfg_.addr) return true;
  return is_border_router() && (fin == kControllerAddr || fin == kExternalServerAddr);
}

void Node::age_table() {
  const SimTime now = env_.events().now();
  const SimTime whole = (now - last_tick_) / kMicrosPerSecond;
  if (whole <= 0) return;
  table_.tick(static_cast<std::uint32_t>(whole));
  last_tick_ += whole * kMicrosPerSecond;
}

void Node::sdn_forward(Frame f, bool at_origin, bool allow_miss) {
  if (bypass(f)) {
    deliver_frame_up(f);
    return;
  }
  age_table();
  ++flow_lookups_;
  MatchOutcome m = table_.lookup(f);
  if (!m.matched) {
    if (allow_miss) {
      handle_table_miss(std::move(f), at_origin);
    } else {
      env_.diagnostic(cfg_.addr, "MissAfterInstall");
    }
    return;
  }
  ActionResult r = apply_actions(std::move(f), m.plan);
  for (const auto& diag : r.diagnostics) env_.diagnostic(cfg_.addr, diag);
  switch (r.kind) {
    case DispositionKind::kForward: {
      if (r.frame.mesh && r.frame.mesh->hops_left == 0) {
        env_.diagnostic(cfg_.addr, "HopLimit");
        return;
      }
      const ShortAddr nh = r.next_hop;
      if (at_origin) {
        send_unicast(std::move(r.frame), nh);
      } else {
        env_.events().schedule_in(hop_cost(StackMode::kSdn, 1, p_.costs),
                                  [this, fr = std::move(r.frame), nh]() mutable { send_unicast(std::move(fr), nh); });
      }
      return;
    }
    case DispositionKind::kBroadcast:
      send_broadcast(std::move(r.frame));
      return;
    case DispositionKind::kToUpper:
      deliver_frame_up(r.frame);
      return;
    case DispositionKind::kDropped:
      env_.diagnostic(cfg_.addr, "FlowDrop");
      return;
  }
}

void Node::handle_table_miss(Frame f, bool at_origin) {
  if (f.mesh && f.mesh->final_addr == kControllerAddr) {
    env_.diagnostic(cfg_.addr, "NoUpstream");
    return;
  }
  if (miss_queue_size() >= p_.sdn.miss_queue_cap) {
    env_.diagnostic(cfg_.addr, "MissQueueFull");
    return;
  }
  MissKey key;
  TableMissReport rep;
  rep.node = cfg_.addr;
  if (key_features_.empty()) {
    key.frame_bytes = encode_frame_bytes(f);
    rep.features = key.frame_bytes;
  } else {
    key.values = key_feature_values(f, key_features_);
    rep.features = key.values;
  }
  PendingMiss& pm = misses_[key];
  pm.frames.push_back({std::move(f), at_origin});
  if (pm.outstanding) return;
  pm.outstanding = true;
  env_.table_miss_requested(cfg_.addr);
  sbi_.request(kControllerAddr, Code::kPost, {"flow-engine"}, encode_table_miss(rep),
               [this, key](const std::optional<SbiMessage>& resp) { on_miss_response(key, resp); });
}

void Node::on_miss_response(const MissKey& key, const std::optional<SbiMessage>& resp) {
  auto it = misses_.find(key);
  if (it == misses_.end()) return;
  std::vector<Buffered> frames = std::move(it->second.frames);
  misses_.erase(it);

  const char* failure = nullptr;
  if (!resp) {
    failure = "MissTimeout";
  } else if (!is_success(resp->code)) {
    failure = "MissRefused";
  } else {
    try {
      age_table();
      const SimTime now = env_.events().now();
      for (auto& e : decode_flow_entries(resp->payload)) {
        if (table_.install(std::move(e), now) == InstallResult::kRejected) env_.diagnostic(cfg_.addr, "TableFull");
      }
    } catch (const Error&) {
      failure = "MalformedEntries";
    }
  }
  if (failure) {
    for (std::size_t i = 0; i < frames.size(); ++i) env_.diagnostic(cfg_.addr, failure);
    return;
  }
  for (auto& b : frames) sdn_forward(std::move(b.frame), b.at_origin, false);
}

void Node::sbi_send(ShortAddr dst, const SbiMessage& m, MessageCategory c) {
  auto bytes = encode_message(m);
  const auto len = static_cast<std::uint16_t>(bytes.size());
  originate(make_datagram(dst, DatagramKind::kSbi, c, len, std::move(bytes)), cfg_.addr);
}

void Node::register_resources() {
  ResourceRouter& r = sbi_.resources();
  r.add("/flow-table", Code::kGet, [this](ShortAddr, const SbiMessage&) {
    age_table();
    return SbiResponse{Code::kContent, encode_flow_entries(table_.entries())};
  });
  r.add("/flow-table", Code::kPut, [this](ShortAddr, const SbiMessage& req) {
    auto entries = decode_flow_entries(req.payload);
    age_table();
    bool rejected = false;
    for (auto& e : entries) rejected |= table_.install(std::move(e), env_.events().now()) == InstallResult::kRejected;
    return SbiResponse{rejected ? Code::kInternalError : Code::kChanged, {}};
  });
  r.add("/flow-table", Code::kDelete, [this](ShortAddr, const SbiMessage&) {
    table_.clear();
    // Bootstrap entries belong to the local controller; without them the
    // acknowledgement could not reach the controller.
    refresh_bootstrap();
    return SbiResponse{Code::kDeleted, {}};
  });
  r.add("/update-period", Code::kGet, [this](ShortAddr, const SbiMessage&) {
    return SbiResponse{Code::kContent, encode_uint(update_period_s_)};
  });
  r.add("/update-period", Code::kPost, [this](ShortAddr, const SbiMessage& req) {
    const auto v = decode_uint(req.payload);
    if (v == 0 || v > 0xFFFFFFFFull) return SbiResponse{Code::kInternalError, {}};
    update_period_s_ = static_cast<std::uint32_t>(v);
    return SbiResponse{Code::kChanged, {}};
  });
  r.add("/key-feature", Code::kGet, [this](ShortAddr, const SbiMessage&) {
    return SbiResponse{Code::kContent, encode_key_features(key_features_)};
  });
  r.add("/key-feature", Code::kPost, [this](ShortAddr, const SbiMessage& req) {
    key_features_ = decode_key_features(req.payload);
    return SbiResponse{Code::kChanged, {}};
  });
  r.add("/neighbors", Code::kGet, [this](ShortAddr, const SbiMessage&) {
    const auto snap = neighbors_.snapshot();
    return SbiResponse{Code::kContent, encode_neighbors(snap)};
  });
}

void Node::install_upstream() {
  if (!rpl_.parent) return;
  age_table();
  table_.install(upstream_entry(*rpl_.parent, 2 * update_period_s_), env_.events().now());
}

void Node::refresh_bootstrap() {
  age_table();
  const auto nbrs = neighbors_.addresses();
  for (auto& e : bootstrap_entries(rpl_.parent, nbrs, update_period_s_)) {
    table_.install(std::move(e), env_.events().now());
  }
}

void Node::schedule_report(SimTime delay) {
  if (report_scheduled_) env_.events().cancel(report_timer_);
  report_scheduled_ = true;
  report_timer_ = env_.events().schedule_in(delay, [this] {
    report_scheduled_ = false;
    send_report();
  });
}

void Node::send_report() {
  purge_neighbors();
  refresh_bootstrap();
  TopologyReport rep;
  rep.node = cfg_.addr;
  rep.update_period_s = update_period_s_;
  rep.neighbors = neighbors_.snapshot();
  last_report_at_ = env_.events().now();
  report_pending_change_ = false;
  sbi_.request(kControllerAddr, Code::kPost, {"network"}, encode_topology_report(rep),
               [this](const std::optional<SbiMessage>& resp) {
                 if (!resp || !is_success(resp->code) || resp->payload.empty()) return;
                 try {
                   apply_settings(decode_settings(resp->payload));
                 } catch (const Error&) {
                   env_.diagnostic(cfg_.addr, "MalformedSettings");
                 }
               });
  const double j = p_.sdn.update_jitter;
  const double period = update_period_s_ * env_.rng().uniform(1.0 - j, 1.0 + j);
  schedule_report(from_seconds(period));
}

void Node::apply_settings(const NodeSettings& s) {
  if (s.key_features) key_features_ = *s.key_features;
  if (s.default_ttl_s) default_ttl_s_ = *s.default_ttl_s;
  if (s.update_period_s && *s.update_period_s > 0 && *s.update_period_s != update_period_s_) {
    update_period_s_ = *s.update_period_s;
    const double j = p_.sdn.update_jitter;
    schedule_report(from_seconds(update_period_s_ * env_.rng().uniform(1.0 - j, 1.0 + j)));
  }
}

void Node::neighbors_changed() {
  if (p_.mode != StackMode::kSdn || !joined_ || last_report_at_ < 0 || report_pending_change_) return;
  report_pending_change_ = true;
  const SimTime earliest = last_report_at_ + from_seconds(p_.sdn.report_holddown_s);
  schedule_report(std::max<SimTime>(0, earliest - env_.events().now()));
}

// --- route-over -------------------------------------------------------------

void Node::route_over(DatagramPtr d, bool at_origin) {
  if (is_border_router() && (d->dst == kExternalServerAddr || d->dst == kControllerAddr)) {
    env_.external_send(std::move(d));
    return;
  }
  if (d->dst == cfg_.addr) {
    deliver_up(std::move(d));
    return;
  }
  const SimTime now = env_.events().now();
  std::optional<ShortAddr> nh = routes_.next_hop(d->dst, now);
  if (!nh) nh = rpl_.parent;
  if (!nh) {
    env_.diagnostic(cfg_.addr, "NoRoute");
    return;
  }
  std::vector<Frame> frames = fragment(d, std::nullopt, p_.limits, next_tag_++);
  const SimTime delay = at_origin ? 0 : hop_cost(StackMode::kRplBaseline, frames.size(), p_.costs);
  if (delay == 0) {
    for (auto& f : frames) send_unicast(std::move(f), *nh);
    return;
  }
  env_.events().schedule_in(delay, [this, frames = std::move(frames), hop = *nh]() mutable {
    for (auto& f : frames) send_unicast(std::move(f), hop);
  });
}

// --- RPL-lite ---------------------------------------------------------------

void Node::trickle_start_interval() {
  const SimTime now = env_.events().now();
  trickle_fire_ = env_.events().schedule_at(now + trickle_.draw_fire_offset(env_.rng()), [this] { send_dio(); });
  trickle_end_ = env_.events().schedule_at(now + trickle_.interval(), [this] {
    trickle_.expire();
    trickle_start_interval();
  });
}

void Node::trickle_reset() {
  if (trickle_running_) {
    env_.events().cancel(trickle_fire_);
    env_.events().cancel(trickle_end_);
  }
  trickle_.reset();
  trickle_running_ = true;
  trickle_start_interval();
}

void Node::send_dio() {
  if (rpl_.rank >= kInfiniteRank || !dodag_root_) return;
  std::vector<std::uint8_t> body = {
      static_cast<std::uint8_t>(rpl_.rank >> 8), static_cast<std::uint8_t>(rpl_.rank & 0xFF),
      static_cast<std::uint8_t>(dodag_root_->value >> 8), static_cast<std::uint8_t>(dodag_root_->value & 0xFF)};
  originate(make_datagram(kBroadcastAddr, DatagramKind::kRplDio, MessageCategory::kDio, p_.rpl.dio_app_len,
                          std::move(body)),
            cfg_.addr);
}

void Node::on_dio(ShortAddr sender, std::uint32_t sender_rank, ShortAddr root) {
  const DioOutcome o = rpl_on_dio(rpl_, sender, sender_rank, neighbors_.etx(sender), p_.rpl.hysteresis);
  if (o == DioOutcome::kParentAdopted || o == DioOutcome::kParentSwitched) {
    dodag_root_ = root;
    on_parent_change();
  } else if (o == DioOutcome::kParentLost) {
    trickle_reset();
  }
}

void Node::on_parent_change() {
  trickle_reset();
  if (p_.mode != StackMode::kSdn) return;
  install_upstream();
  if (!joined_) {
    joined_ = true;
    schedule_report(from_seconds(env_.rng().uniform(0.0, p_.sdn.first_report_delay_max_s)));
  }
}

void Node::schedule_dao(SimTime delay) {
  env_.events().schedule_in(delay, [this] {
    if (rpl_.parent) send_dao(cfg_.addr);
    schedule_dao(seconds(p_.rpl.dao_period_s));
  });
}

void Node::send_dao(ShortAddr target) {
  if (!rpl_.parent) return;
  std::vector<std::uint8_t> body = {static_cast<std::uint8_t>(target.value >> 8),
                                    static_cast<std::uint8_t>(target.value & 0xFF)};
  originate(make_datagram(*rpl_.parent, DatagramKind::kRplDao, MessageCategory::kDao, p_.rpl.dao_app_len,
                          std::move(body)),
            cfg_.addr);
}

void Node::on_dao(ShortAddr child, ShortAddr target) {
  const SimTime now = env_.events().now();
  routes_.purge(now);
  const SimTime expires = now + 3 * seconds(p_.rpl.dao_period_s);
  if (routes_.upsert(target, child, expires) == RoutingTable::Result::kRejected) {
    env_.diagnostic(cfg_.addr, "RouteTableFull");
  }
  if (!rpl_.is_root) send_dao(target);
}

// --- traffic ----------------------------------------------------------------

void Node::schedule_traffic(SimTime delay) {
  env_.events().schedule_in(delay, [this] {
    send_app(*cfg_.traffic_dst);
    const double period = env_.rng().uniform(p_.traffic.period_min_s, p_.traffic.period_max_s);
    schedule_traffic(from_seconds(period));
  });
}

void Node::send_app(ShortAddr dst) {
  const SimTime now = env_.events().now();
  std::erase_if(app_outstanding_, [now](const auto& kv) { return now - kv.second.sent_at > seconds(300); });
  AppBody b;
  b.seq = next_app_seq_++;
  const std::uint64_t id = env_.next_datagram_id();
  b.request_id = id;
  auto d = std::make_shared<Datagram>();
  d->id = id;
  d->src = cfg_.addr;
  d->dst = dst;
  d->kind = DatagramKind::kUdpData;
  d->category = MessageCategory::kData;
  d->app_payload_len = p_.traffic.payload_bytes;
  d->compressed_header_len = p_.compressed_header_len;
  d->created_at = now;
  d->body = encode_app_body(b);
  env_.datagram_created(cfg_.addr, *d);
  app_outstanding_[b.seq] = {now, id, dst};
  originate(std::move(d), cfg_.addr);
}

}  // namespace sd6lo
