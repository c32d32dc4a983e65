// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/sim.hpp"

#include <algorithm>
#include <cmath>

namespace sd6lo {

// ---------------------------------------------------------------------------
// Medium

Medium::Medium(std::vector<Position> positions, UdgmParams params)
    : pos_(std::move(positions)), p_(params), tx_nbrs_(pos_.size()), interferes_at_(pos_.size()) {
  const std::size_t n = pos_.size();
  for (std::size_t a = 0; a < n; ++a) {
    interferes_at_[a].assign(n, false);
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const double d = distance(a, b);
      if (d <= p_.tx_range_m) tx_nbrs_[a].push_back(b);
      if (d <= p_.interference_range_m) interferes_at_[a][b] = true;
    }
  }
}

double Medium::distance(std::size_t a, std::size_t b) const {
  return std::hypot(pos_[a].x - pos_[b].x, pos_[a].y - pos_[b].y);
}

std::int32_t Medium::rssi_dbm(std::size_t a, std::size_t b) const {
  const double d = std::max(distance(a, b), 1.0);
  return static_cast<std::int32_t>(std::lround(-40.0 - 25.0 * std::log10(d)));
}

void Medium::prune(SimTime now) {
  while (!txs_.empty() && txs_.front().end < now - max_duration_) txs_.pop_front();
}

std::uint64_t Medium::begin(std::size_t tx, SimTime start, SimTime end, bool interferes) {
  prune(start);
  max_duration_ = std::max(max_duration_, end - start);
  const std::uint64_t id = next_id_++;
  txs_.push_back({id, tx, start, end, interferes});
  return id;
}

std::vector<Reception> Medium::finish(std::uint64_t id, Rng& rng) {
  auto it = std::find_if(txs_.begin(), txs_.end(), [id](const Tx& t) { return t.id == id; });
  if (it == txs_.end()) return {};
  const Tx me = *it;
  std::vector<Reception> out;
  out.reserve(tx_nbrs_[me.node].size());
  const double p = p_.p_tx_success * p_.p_rx_success;
  for (std::size_t r : tx_nbrs_[me.node]) {
    bool collided = false;
    for (const Tx& o : txs_) {
      if (o.id == me.id || o.start >= me.end || o.end <= me.start) continue;
      // Half duplex: a receiver that transmits during the frame misses it.
      if (o.node == r || (o.interferes && interferes_at_[o.node][r])) {
        collided = true;
        break;
      }
    }
    if (collided) {
      out.push_back({r, RxOutcome::kCollided});
      continue;
    }
    const bool ok = p >= 1.0 || rng.uniform() < p;
    out.push_back({r, ok ? RxOutcome::kDelivered : RxOutcome::kLost});
  }
  return out;
}

bool Medium::busy(std::size_t node, SimTime now) const {
  for (const Tx& t : txs_) {
    if (t.start <= now && now < t.end && (t.node == node || interferes_at_[t.node][node])) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Metrics

std::uint64_t CategoryCounters::control_bytes() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < kMessageCategoryCount; ++c)
    if (static_cast<MessageCategory>(c) != MessageCategory::kData) s += bytes[c];
  return s;
}

std::uint64_t CategoryCounters::control_frames() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < kMessageCategoryCount; ++c)
    if (static_cast<MessageCategory>(c) != MessageCategory::kData) s += frames[c];
  return s;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

std::vector<Position> positions_of(const Scenario& s) {
  std::vector<Position> out;
  for (const auto& n : s.nodes) out.push_back({n.x_m, n.y_m});
  return out;
}

ControllerConfig controller_config(const Scenario& s) {
  ControllerConfig c;
  c.default_ttl_s = s.sdn.default_ttl_s;
  c.key_features = s.sdn.key_features;
  c.settings.update_period_s = s.sdn.update_period_s;
  c.settings.key_features = s.sdn.key_features;
  c.settings.default_ttl_s = s.sdn.default_ttl_s;
  return c;
}

constexpr SimTime kControllerExpireInterval = seconds(60);

}  // namespace

Simulation::Simulation(const Scenario& scenario, StackMode mode, std::uint64_t seed)
    : scenario_(scenario),
      mode_(mode),
      params_(stack_params(scenario, mode)),
      rng_(seed),
      medium_(positions_of(scenario), scenario.channel) {
  validate_scenario(scenario);
  metrics_.seed = seed;
  metrics_.warmup = from_seconds(scenario.run.warmup_s);
  metrics_.duration = from_seconds(scenario.run.duration_s);
  macs_.resize(scenario.nodes.size());
  for (std::size_t i = 0; i < scenario.nodes.size(); ++i) {
    const NodeSpec& ns = scenario.nodes[i];
    NodeConfig cfg{ShortAddr{ns.id}, ns.role, ns.traffic_dst};
    nodes_.push_back(std::make_unique<Node>(cfg, params_, static_cast<NodeEnv&>(*this)));
    index_[cfg.addr] = i;
    if (ns.role == NodeRole::kBorderRouter) br_index_ = i;
  }
  if (mode_ == StackMode::kSdn) {
    controller_ = std::make_unique<Controller>(controller_config(scenario));
    controller_ep_ = std::make_unique<SbiEndpoint>(
        events_, [this](ShortAddr dst, const SbiMessage& m, MessageCategory c) { controller_send(dst, m, c); },
        params_.retx);
    controller_->attach(
        *controller_ep_, [this] { return events_.now(); },
        [this](ShortAddr node, std::vector<FlowEntry> entries) {
          controller_ep_->request(node, Code::kPut, {"flow-table"}, encode_flow_entries(entries),
                                  [this](const std::optional<SbiMessage>& r) {
                                    if (!r || !is_success(r->code)) diagnostic(kControllerAddr, "PushFailed");
                                  });
        });
  }
}

Simulation::~Simulation() = default;

Node& Simulation::node(ShortAddr a) {
  auto it = index_.find(a);
  if (it == index_.end()) throw Error(Errc::kConfigError, "no node " + to_string(a));
  return *nodes_[it->second];
}

void Simulation::run_until(SimTime t) {
  if (!ran_) {
    ran_ = true;
    for (auto& n : nodes_) n->start();
    if (controller_) events_.schedule_in(kControllerExpireInterval, [this] { controller_tick(); });
  }
  events_.run_until(t);
  metrics_.events = events_.executed();
}

void Simulation::controller_tick() {
  controller_->expire(events_.now());
  events_.schedule_in(kControllerExpireInterval, [this] { controller_tick(); });
}

const Metrics& Simulation::run() {
  run_until(metrics_.duration);
  return metrics_;
}

bool Simulation::parent_chains_acyclic() const {
  const std::size_t n = nodes_.size();
  for (const auto& start : nodes_) {
    std::optional<ShortAddr> cur = start->addr();
    std::size_t steps = 0;
    while (cur) {
      auto it = index_.find(*cur);
      if (it == index_.end()) break;
      const Node& nd = *nodes_[it->second];
      if (nd.rpl().is_root || !nd.rpl().parent) break;
      cur = nd.rpl().parent;
      if (++steps >= n) return false;
    }
  }
  return true;
}

// --- NodeEnv ----------------------------------------------------------------

void Simulation::datagram_created(ShortAddr, const Datagram& d) {
  const auto w = static_cast<std::size_t>(metrics_.window_of(events_.now()));
  ++metrics_.datagrams_created[w][static_cast<std::size_t>(d.kind)];
}

void Simulation::table_miss_requested(ShortAddr) {
  ++metrics_.miss_requests[static_cast<std::size_t>(metrics_.window_of(events_.now()))];
}

void Simulation::rtt_sample(ShortAddr node, ShortAddr peer, SimTime sent_at, SimTime rtt, std::uint64_t request_id,
                            std::uint64_t reply_id) {
  RttSample s;
  s.send_time = sent_at;
  s.rtt = rtt;
  s.src = node;
  s.dst = peer;
  s.steady = sent_at >= metrics_.warmup;
  if (auto it = data_paths_.find(request_id); it != data_paths_.end()) {
    s.fwd_path = std::move(it->second);
    data_paths_.erase(it);
  }
  if (auto it = data_paths_.find(reply_id); it != data_paths_.end()) {
    s.rev_path = std::move(it->second);
    data_paths_.erase(it);
  }
  metrics_.rtt.push_back(std::move(s));
}

void Simulation::diagnostic(ShortAddr, const std::string& cause) { ++metrics_.diagnostics[cause]; }

void Simulation::external_send(DatagramPtr d) {
  const SimTime link = params_.costs.t_ext_link_us;
  if (d->dst == kControllerAddr) {
    if (!controller_ep_) {
      diagnostic(kControllerAddr, "NoController");
      return;
    }
    events_.schedule_in(link, [this, d] {
      try {
        controller_ep_->receive(d->src, decode_message(d->body));
      } catch (const Error&) {
        diagnostic(kControllerAddr, "MalformedSbi");
      }
    });
    return;
  }
  if (d->dst != kExternalServerAddr) {
    diagnostic(nodes_[br_index_]->addr(), "UnknownExternal");
    return;
  }
  // UDP echo server: the reply leaves the server as soon as the request arrives.
  events_.schedule_in(link, [this, d, link] {
    DatagramPtr reply = make_echo_reply(*d, next_datagram_id(), events_.now());
    events_.schedule_in(link, [this, reply] { nodes_[br_index_]->inject(reply); });
  });
}

void Simulation::controller_send(ShortAddr dst, const SbiMessage& m, MessageCategory c) {
  auto d = std::make_shared<Datagram>();
  d->id = next_datagram_id();
  d->src = kControllerAddr;
  d->dst = dst;
  d->kind = DatagramKind::kSbi;
  d->category = c;
  d->body = encode_message(m);
  d->app_payload_len = static_cast<std::uint16_t>(d->body.size());
  d->compressed_header_len = params_.compressed_header_len;
  d->created_at = events_.now();
  datagram_created(kControllerAddr, *d);
  events_.schedule_in(params_.costs.t_ext_link_us, [this, d] { nodes_[br_index_]->inject(d); });
}

// --- MAC --------------------------------------------------------------------

void Simulation::mac_send(ShortAddr node, Frame f, std::function<void(int)> done) {
  const std::size_t i = index_.at(node);
  MacState& m = macs_[i];
  if (m.queue.size() >= params_.mac.queue_cap) {
    diagnostic(node, "MacQueueFull");
    return;
  }
  m.queue.push_back({std::move(f), std::move(done)});
  if (!m.active) mac_start(i);
}

void Simulation::mac_start(std::size_t i) {
  MacState& m = macs_[i];
  if (m.queue.empty()) {
    m.active = false;
    return;
  }
  m.active = true;
  m.attempt = 1;
  m.cca_tries = 0;
  ++m.seq;
  mac_backoff(i);
}

void Simulation::mac_backoff(std::size_t i) {
  const SimTime delay = rng_.uniform_int(0, params_.mac.backoff_max_us);
  events_.schedule_in(delay, [this, i] { mac_cca(i); });
}

void Simulation::mac_cca(std::size_t i) {
  MacState& m = macs_[i];
  if (medium_.busy(i, events_.now())) {
    if (++m.cca_tries > params_.mac.max_cca_redraws) {
      diagnostic(nodes_[i]->addr(), "ChannelBusy");
      mac_attempt_failed(i);
      return;
    }
    mac_backoff(i);
    return;
  }
  mac_transmit(i);
}

void Simulation::mac_transmit(std::size_t i) {
  MacState& m = macs_[i];
  const Frame& f = m.queue.front().frame;
  const SimTime now = events_.now();
  const std::size_t bytes = on_air_bytes(f, params_.limits);
  const SimTime end = now + airtime(bytes, params_.costs.bitrate_bps);
  ++metrics_.frames_transmitted;
  metrics_.on_air_bytes += bytes;
  const auto cat = static_cast<std::size_t>(f.datagram ? f.datagram->category : MessageCategory::kData);
  CategoryCounters& cc = metrics_.by_window[static_cast<std::size_t>(metrics_.window_of(now))];
  ++cc.frames[cat];
  cc.bytes[cat] += bytes;
  const std::uint64_t tx = medium_.begin(i, now, end);
  events_.schedule_at(end, [this, i, tx, now] { mac_end_data(i, tx, now); });
}

void Simulation::mac_end_data(std::size_t i, std::uint64_t tx_id, SimTime) {
  MacState& m = macs_[i];
  // Copy: delivering the frame may queue more frames at this node.
  const Frame f = m.queue.front().frame;
  const std::uint8_t seq = m.seq;
  const SimTime now = events_.now();
  const bool unicast = !f.mac_dst.is_broadcast();
  const auto recs = medium_.finish(tx_id, rng_);

  bool acked = false;
  SimTime ack_end = 0;
  std::vector<std::size_t> deliver;
  for (const Reception& r : recs) {
    ++metrics_.rx_attempts;
    switch (r.outcome) {
      case RxOutcome::kDelivered: ++metrics_.rx_delivered; break;
      case RxOutcome::kLost: ++metrics_.rx_lost; continue;
      case RxOutcome::kCollided: ++metrics_.rx_collided; continue;
    }
    Node& rx = *nodes_[r.receiver];
    rx.on_overhear(f.mac_src, medium_.rssi_dbm(i, r.receiver));
    if (!unicast) {
      deliver.push_back(r.receiver);
      continue;
    }
    if (rx.addr() != f.mac_dst) continue;
    // Addressed receiver: acknowledge after the turnaround. The ack keeps
    // the channel busy for carrier sense but does not collide.
    const SimTime a0 = now + params_.mac.turnaround_us;
    const SimTime a1 = a0 + airtime(params_.mac.ack_bytes, params_.costs.bitrate_bps);
    const std::size_t rxi = r.receiver;
    events_.schedule_at(a0, [this, rxi, a0, a1] { medium_.begin(rxi, a0, a1, false); });
    ++metrics_.mac_acks;
    const double p = scenario_.channel.p_tx_success * scenario_.channel.p_rx_success;
    acked = p >= 1.0 || rng_.uniform() < p;
    ack_end = a1;
    auto& last = macs_[rxi].last_seq_from;
    auto it = last.find(i);
    if (it != last.end() && it->second == seq) continue;  // retransmission of a delivered frame
    last[i] = seq;
    deliver.push_back(rxi);
  }

  if (unicast && acked && f.datagram && f.datagram->category == MessageCategory::kData &&
      (!f.frag || f.frag->is_first)) {
    auto& path = data_paths_[f.datagram->id];
    if (path.empty()) path.push_back(f.mac_src);
    if (path.back() != f.mac_dst) path.push_back(f.mac_dst);
  }

  for (std::size_t r : deliver) nodes_[r]->on_receive(f);

  if (!unicast) {
    mac_finish(i, 1);
    return;
  }
  if (acked) {
    const int attempts = m.attempt;
    events_.schedule_at(ack_end, [this, i, attempts] { mac_finish(i, attempts); });
    return;
  }
  events_.schedule_at(now + params_.mac.ack_timeout_us, [this, i] { mac_attempt_failed(i); });
}

void Simulation::mac_attempt_failed(std::size_t i) {
  MacState& m = macs_[i];
  if (m.attempt >= params_.mac.max_attempts) {
    mac_finish(i, 0);
    return;
  }
  ++m.attempt;
  m.cca_tries = 0;
  mac_backoff(i);
}

void Simulation::mac_finish(std::size_t i, int attempts) {
  MacState& m = macs_[i];
  MacJob job = std::move(m.queue.front());
  m.queue.pop_front();
  m.active = false;
  if (job.done) job.done(attempts);
  if (!m.active) mac_start(i);
}

Metrics run_replica(const Scenario& scenario, StackMode mode, std::uint64_t seed) {
  Simulation sim(scenario, mode, seed);
  return sim.run();
}

// ---------------------------------------------------------------------------
// Chain pipeline

std::size_t datagram_size_for(std::size_t fragments, bool with_mesh, const LinkLimits& limits) {
  for (std::size_t total = 1; total <= kMaxDatagramSize; ++total) {
    if (fragment_count(total, with_mesh, limits) == fragments) return total;
  }
  throw Error(Errc::kDatagramTooLarge, "no datagram splits into " + std::to_string(fragments) + " fragments");
}

ChainResult simulate_chain(StackMode mode, std::size_t fragments, std::size_t hops, SimTime t,
                           const CostModel& costs) {
  const bool mesh_under = mode == StackMode::kSdn;
  const LinkLimits limits;
  const ShortAddr dst{static_cast<std::uint16_t>(hops)};

  auto d = std::make_shared<Datagram>();
  d->id = 1;
  d->src = ShortAddr{0};
  d->dst = dst;
  const std::size_t total = datagram_size_for(fragments, mesh_under, limits);
  d->compressed_header_len = 0;
  d->app_payload_len = static_cast<std::uint16_t>(total);

  EventQueue q;
  ChainResult res;
  std::vector<FlowTable> tables(hops);
  std::vector<ReassemblyBuffer> buffers(hops + 1);
  for (std::size_t i = 0; i < hops; ++i) {
    FlowEntry e;
    e.priority = kSynthesizedPriority;
    e.rules = {Rule{Field::kMeshFinal, 0, 16, Op::kEq, dst.value}};
    e.actions = {Action::decrement(Field::kMeshHopsLeft, 1),
                 Action::forward(ShortAddr{static_cast<std::uint16_t>(i + 1)})};
    e.ttl_s = 600;
    tables[i].install(e, 0);
  }

  // One transmitter per node; a link carries one frame at a time.
  std::vector<std::deque<Frame>> txq(hops);
  std::vector<bool> busy(hops, false);
  std::function<void(std::size_t)> pump;
  std::function<void(std::size_t, Frame)> arrive;

  pump = [&](std::size_t i) {
    if (busy[i] || txq[i].empty()) return;
    busy[i] = true;
    Frame f = std::move(txq[i].front());
    txq[i].pop_front();
    ++res.link_transmissions;
    q.schedule_in(t, [&, i, f = std::move(f)]() mutable {
      busy[i] = false;
      arrive(i + 1, std::move(f));
      pump(i);
    });
  };

  auto enqueue = [&](std::size_t i, Frame f) {
    txq[i].push_back(std::move(f));
    pump(i);
  };

  arrive = [&](std::size_t node, Frame f) {
    if (node == hops) {
      const auto r = buffers[node].add(f, q.now());
      if (r.status == ReassemblyStatus::kComplete) res.completion = q.now();
      return;
    }
    if (mesh_under) {
      MatchOutcome m = tables[node].lookup(f);
      ActionResult a = apply_actions(std::move(f), m.plan);
      a.frame.mac_src = ShortAddr{static_cast<std::uint16_t>(node)};
      a.frame.mac_dst = a.next_hop;
      q.schedule_in(costs.t_proc_mesh_us, [&, node, fr = std::move(a.frame)]() mutable { enqueue(node, std::move(fr)); });
      return;
    }
    const auto r = buffers[node].add(f, q.now());
    if (r.status != ReassemblyStatus::kComplete) return;
    auto frames = fragment(r.datagram, std::nullopt, limits, static_cast<std::uint16_t>(node + 1));
    const SimTime delay = hop_cost(StackMode::kRplBaseline, frames.size(), costs);
    q.schedule_in(delay,
                  [&, node, frames = std::move(frames)]() mutable {
                    for (auto& fr : frames) enqueue(node, std::move(fr));
                  });
  };

  std::optional<MeshHeader> mesh;
  if (mesh_under) mesh = MeshHeader{kInitialHopsLeft, d->src, dst};
  auto frames = fragment(d, mesh, limits, 1);
  res.fragments = frames.size();
  for (auto& f : frames) enqueue(0, std::move(f));
  q.run();
  return res;
}

}  // namespace sd6lo
