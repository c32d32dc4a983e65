// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/controller.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>
#include <tuple>

namespace sd6lo {

// ---------------------------------------------------------------------------
// Graph

MergeDiff TopologyGraph::merge_report(const TopologyReport& r, SimTime now) {
  MergeDiff diff;
  auto [nit, added] = nodes_.try_emplace(r.node);
  GraphNode& n = nit->second;
  diff.node_added = added;
  diff.node_recovered = !added && n.stale;
  n.battery = r.battery_level;
  n.update_period_s = r.update_period_s;
  n.last_report = now;
  n.stale = false;

  std::set<ShortAddr> reported;
  for (const auto& nb : r.neighbors) {
    if (nb.addr == r.node) continue;
    reported.insert(nb.addr);
    auto [eit, fresh] = edges_.try_emplace({r.node, nb.addr});
    GraphEdge& e = eit->second;
    if (fresh) {
      ++diff.edges_added;
    } else if (e.stale || e.etx_x128 != nb.etx_x128) {
      ++diff.edges_changed;
    }
    e.etx_x128 = nb.etx_x128;
    e.rssi_dbm = nb.rssi_dbm;
    e.last_seen = now;
    e.stale = false;
  }
  for (auto it = edges_.lower_bound({r.node, ShortAddr{0}}); it != edges_.end() && it->first.first == r.node; ++it) {
    if (!reported.count(it->first.second) && !it->second.stale) {
      it->second.stale = true;
      ++diff.edges_staled;
    }
  }
  return diff;
}

ExpireSummary TopologyGraph::expire(SimTime now) {
  ExpireSummary s;
  for (auto it = edges_.begin(); it != edges_.end();) {
    auto nit = nodes_.find(it->first.first);
    const SimTime limit = nit == nodes_.end() ? 0 : seconds(2 * static_cast<std::int64_t>(nit->second.update_period_s));
    if (nit == nodes_.end() || now - it->second.last_seen > limit) {
      it = edges_.erase(it);
      ++s.edges_removed;
    } else {
      ++it;
    }
  }
  for (auto& [a, n] : nodes_) {
    if (!n.stale && now - n.last_report > seconds(2 * static_cast<std::int64_t>(n.update_period_s))) {
      n.stale = true;
      s.nodes_staled.push_back(a);
    }
  }
  return s;
}

bool TopologyGraph::node_usable(ShortAddr a, SimTime now) const {
  auto it = nodes_.find(a);
  if (it == nodes_.end() || it->second.stale) return false;
  return now - it->second.last_report <= seconds(2 * static_cast<std::int64_t>(it->second.update_period_s));
}

bool TopologyGraph::edge_usable(ShortAddr from, ShortAddr to, SimTime now) const {
  auto it = edges_.find({from, to});
  if (it == edges_.end() || it->second.stale || !node_usable(from, now)) return false;
  auto to_it = nodes_.find(to);
  if (to_it != nodes_.end() && !node_usable(to, now)) return false;
  const auto period = nodes_.at(from).update_period_s;
  return now - it->second.last_seen <= seconds(2 * static_cast<std::int64_t>(period));
}

std::string TopologyGraph::dump(SimTime now) const {
  std::ostringstream os;
  for (const auto& [a, n] : nodes_) {
    os << "node " << a.value << " battery=" << n.battery << " period=" << n.update_period_s
       << " last_report=" << n.last_report << (node_usable(a, now) ? "" : " stale") << '\n';
  }
  for (const auto& [k, e] : edges_) {
    os << "edge " << k.first.value << "->" << k.second.value << " etx=" << e.etx_x128 << " rssi=" << e.rssi_dbm
       << (edge_usable(k.first, k.second, now) ? "" : " unusable") << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Paths

std::optional<Path> compute_path(const TopologyGraph& g, ShortAddr src, ShortAddr dst, SimTime now,
                                 const PathPolicy& policy) {
  if (src == dst) {
    if (!g.has_node(src)) return std::nullopt;
    return Path{{src}, 0};
  }
  // out[u][v] = cost of the usable link u->v.
  std::map<ShortAddr, std::map<ShortAddr, std::uint64_t>> out;
  auto cost_of = [&](const GraphEdge& e) -> std::uint64_t {
    return policy.metric == PathMetric::kHop ? 128 : std::max<std::uint32_t>(e.etx_x128, 1);
  };
  for (const auto& [k, e] : g.edges()) {
    if (g.edge_usable(k.first, k.second, now)) out[k.first][k.second] = cost_of(e);
  }
  if (policy.allow_reverse_edges) {
    for (const auto& [k, e] : g.edges()) {
      if (!g.edge_usable(k.first, k.second, now)) continue;
      out[k.second].try_emplace(k.first, cost_of(e));
    }
  }
  std::map<ShortAddr, std::vector<std::pair<ShortAddr, std::uint64_t>>> in;
  for (const auto& [u, vs] : out) {
    for (const auto& [v, c] : vs) in[v].push_back({u, c});
  }

  // Distances to dst over reversed links.
  constexpr auto kInf = std::numeric_limits<std::uint64_t>::max();
  std::map<ShortAddr, std::uint64_t> dist;
  using Item = std::pair<std::uint64_t, ShortAddr>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[dst] = 0;
  pq.push({0, dst});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d != dist[v]) continue;
    auto it = in.find(v);
    if (it == in.end()) continue;
    for (const auto& [u, c] : it->second) {
      auto [dit, fresh] = dist.try_emplace(u, kInf);
      if (d + c < dit->second) {
        dit->second = d + c;
        pq.push({d + c, u});
      }
    }
  }
  auto sit = dist.find(src);
  if (sit == dist.end() || sit->second == kInf) return std::nullopt;

  // Greedy walk along tight links, smallest address first, gives the
  // lexicographically least shortest path.
  Path p;
  p.cost = sit->second;
  ShortAddr u = src;
  p.nodes.push_back(u);
  while (u != dst) {
    const std::uint64_t du = dist.at(u);
    std::optional<ShortAddr> next;
    for (const auto& [v, c] : out[u]) {
      auto dv = dist.find(v);
      if (dv != dist.end() && dv->second != kInf && dv->second + c == du) {
        next = v;
        break;
      }
    }
    if (!next) return std::nullopt;
    u = *next;
    p.nodes.push_back(u);
  }
  return p;
}

FlowEntry path_entry(ShortAddr final_addr, ShortAddr next_hop, std::uint32_t ttl_s) {
  FlowEntry e;
  e.priority = kSynthesizedPriority;
  e.rules = {Rule{Field::kMeshFinal, 0, 16, Op::kEq, final_addr.value}};
  e.actions = {Action::decrement(Field::kMeshHopsLeft, 1), Action::forward(next_hop)};
  e.ttl_s = ttl_s;
  return e;
}

std::map<ShortAddr, std::vector<FlowEntry>> synthesize_entries(const std::vector<ShortAddr>& path,
                                                               ShortAddr final_addr, std::uint32_t ttl_s) {
  std::vector<ShortAddr> rev(path.rbegin(), path.rend());
  return synthesize_entries(path, final_addr, ttl_s, rev);
}

std::map<ShortAddr, std::vector<FlowEntry>> synthesize_entries(const std::vector<ShortAddr>& path,
                                                               ShortAddr final_addr, std::uint32_t ttl_s,
                                                               const std::vector<ShortAddr>& reverse_path) {
  std::map<ShortAddr, std::vector<FlowEntry>> out;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) out[path[i]].push_back(path_entry(final_addr, path[i + 1], ttl_s));
  if (!path.empty()) {
    for (std::size_t i = 0; i + 1 < reverse_path.size(); ++i) {
      out[reverse_path[i]].push_back(path_entry(path.front(), reverse_path[i + 1], ttl_s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Controller

bool Controller::RuleLess::operator()(const EntryKey& a, const EntryKey& b) const {
  if (a.first != b.first) return a.first < b.first;
  return std::lexicographical_compare(
      a.second.begin(), a.second.end(), b.second.begin(), b.second.end(), [](const Rule& x, const Rule& y) {
        return std::tie(x.field, x.offset_bits, x.size_bits, x.op, x.value) <
               std::tie(y.field, y.offset_bits, y.size_bits, y.op, y.value);
      });
}

std::uint32_t Controller::control_ttl(ShortAddr node) const {
  auto it = graph_.nodes().find(node);
  return 2 * (it == graph_.nodes().end() ? 1200u : it->second.update_period_s);
}

std::vector<FlowEntry> Controller::track(ShortAddr node, const std::vector<FlowEntry>& candidates, SimTime now) {
  std::vector<FlowEntry> fresh;
  NodeEntries& known = synthesized_[node];
  for (const auto& e : candidates) {
    EntryKey key{e.priority, e.rules};
    auto it = known.find(key);
    if (it != known.end() && it->second.expires_at > now && it->second.entry.actions == e.actions) continue;
    known[key] = Tracked{e, now + seconds(e.ttl_s)};
    fresh.push_back(e);
  }
  return fresh;
}

namespace {

bool hop_usable(const TopologyGraph& g, ShortAddr from, ShortAddr to, SimTime now, const PathPolicy& policy) {
  return g.edge_usable(from, to, now) || (policy.allow_reverse_edges && g.edge_usable(to, from, now));
}

}  // namespace

std::optional<std::vector<ShortAddr>> Controller::tree_chain(ShortAddr final_addr, ShortAddr from, SimTime now,
                                                             const PathPolicy& policy) const {
  std::vector<ShortAddr> chain{from};
  if (from == final_addr) return chain;
  auto tit = trees_.find(final_addr);
  if (tit == trees_.end()) return std::nullopt;
  const auto& tree = tit->second;
  std::set<ShortAddr> seen{from};
  ShortAddr u = from;
  while (u != final_addr) {
    auto it = tree.find(u);
    if (it == tree.end() || !hop_usable(graph_, u, it->second, now, policy)) return std::nullopt;
    u = it->second;
    if (!seen.insert(u).second) return std::nullopt;
    chain.push_back(u);
  }
  return chain;
}

std::optional<std::vector<ShortAddr>> Controller::route(ShortAddr from, ShortAddr final_addr, SimTime now,
                                                        const PathPolicy& policy) {
  if (auto c = tree_chain(final_addr, from, now, policy)) return c;
  auto p = compute_path(graph_, from, final_addr, now, policy);
  if (!p) return std::nullopt;
  auto& tree = trees_[final_addr];
  std::vector<ShortAddr> out;
  for (std::size_t i = 0; i + 1 < p->nodes.size(); ++i) {
    out.push_back(p->nodes[i]);
    tree[p->nodes[i]] = p->nodes[i + 1];
    if (auto rest = tree_chain(final_addr, p->nodes[i + 1], now, policy)) {
      out.insert(out.end(), rest->begin(), rest->end());
      return out;
    }
  }
  out.push_back(final_addr);
  return out;
}

void Controller::push_flow(ShortAddr orig, ShortAddr final_addr, ShortAddr requester, SimTime now,
                           std::vector<FlowEntry>* response, std::map<ShortAddr, std::vector<FlowEntry>>& pushes) {
  auto fwd = route(requester, final_addr, now, cfg_.policy);
  if (!fwd || fwd->size() < 2) return;
  std::vector<ShortAddr> rev_nodes;
  if (orig != final_addr) {
    if (auto rev = route(final_addr, orig, now, cfg_.policy)) rev_nodes = std::move(*rev);
  }
  std::map<ShortAddr, std::vector<FlowEntry>> all;
  for (std::size_t i = 0; i + 1 < fwd->size(); ++i) {
    all[(*fwd)[i]].push_back(path_entry(final_addr, (*fwd)[i + 1], cfg_.default_ttl_s));
  }
  for (std::size_t i = 0; i + 1 < rev_nodes.size(); ++i) {
    all[rev_nodes[i]].push_back(path_entry(orig, rev_nodes[i + 1], cfg_.default_ttl_s));
  }
  for (auto& [n, es] : all) {
    if (response && n == requester) {
      *response = es;
      track(n, es, now);
      continue;
    }
    // A last hop towards a reported neighbor is already covered by the
    // node's own one-hop entry.
    std::vector<FlowEntry> needed;
    for (const auto& e : es) {
      const ShortAddr target{static_cast<std::uint16_t>(e.rules[0].value)};
      const ShortAddr nh{static_cast<std::uint16_t>(e.actions.back().value)};
      if (target == nh && graph_.edge_usable(n, nh, now)) continue;
      needed.push_back(e);
    }
    auto fresh = track(n, needed, now);
    if (!fresh.empty()) {
      stats_.entries_pushed += fresh.size();
      auto& dst = pushes[n];
      dst.insert(dst.end(), fresh.begin(), fresh.end());
    }
  }
}

NetworkResult Controller::handle_network_post(const TopologyReport& r, SimTime now) {
  ++stats_.reports;
  NetworkResult res;
  const bool first = !graph_.has_node(r.node);
  const MergeDiff diff = graph_.merge_report(r, now);
  graph_.expire(now);
  if (first && !cfg_.settings.empty()) res.settings = cfg_.settings;
  if (diff.changed()) {
    // Repair only flows whose installed chain broke; metric drift alone
    // leaves working paths in place.
    for (const auto& [orig, fin] : flows_) {
      if (!graph_.node_usable(orig, now) || !graph_.node_usable(fin, now)) continue;
      ++stats_.resyntheses;
      if (tree_chain(fin, orig, now, cfg_.policy) && tree_chain(orig, fin, now, cfg_.policy)) continue;
      ++stats_.repairs;
      push_flow(orig, fin, orig, now, nullptr, res.pushes);
    }
  }
  return res;
}

FlowEngineResult Controller::handle_flow_engine_post(const TableMissReport& r, SimTime now) {
  ++stats_.flow_requests;
  FlowEngineResult res;
  std::optional<ShortAddr> orig;
  std::optional<ShortAddr> fin;
  if (const auto* values = std::get_if<std::vector<std::uint64_t>>(&r.features)) {
    for (std::size_t i = 0; i < cfg_.key_features.size() && i < values->size(); ++i) {
      const KeyFeature& k = cfg_.key_features[i];
      if (k.offset_bits != 0 || k.size_bits != 16) continue;
      const ShortAddr v{static_cast<std::uint16_t>((*values)[i])};
      if (k.field == Field::kMeshOrig) orig = v;
      if (k.field == Field::kMeshFinal) fin = v;
    }
  } else {
    try {
      Frame f = decode_frame_bytes(std::get<std::vector<std::uint8_t>>(r.features));
      if (f.mesh) {
        orig = f.mesh->originator;
        fin = f.mesh->final_addr;
      }
    } catch (const Error&) {
    }
  }
  graph_.expire(now);
  if (!fin || !graph_.has_node(*fin) || !graph_.has_node(r.node)) {
    ++stats_.unreachable;
    res.code = Code::kNotFound;
    return res;
  }
  if (orig && *orig == kControllerAddr) {
    PathPolicy pol = cfg_.policy;
    pol.allow_reverse_edges = true;
    auto p = route(r.node, *fin, now, pol);
    if (!p || p->size() < 2) {
      ++stats_.unreachable;
      res.code = Code::kNotFound;
      return res;
    }
    res.response = {path_entry(*fin, (*p)[1], control_ttl(*fin))};
    track(r.node, res.response, now);
    return res;
  }
  const ShortAddr o = orig.value_or(r.node);
  push_flow(o, *fin, r.node, now, &res.response, res.pushes);
  if (res.response.empty()) {
    ++stats_.unreachable;
    res.code = Code::kNotFound;
    return res;
  }
  if (graph_.has_node(o)) flows_.insert({o, *fin});
  return res;
}

std::vector<FlowEntry> Controller::handle_flow_engine_get(ShortAddr node, SimTime now) const {
  std::vector<FlowEntry> out;
  auto it = synthesized_.find(node);
  if (it == synthesized_.end()) return out;
  for (const auto& [k, t] : it->second) {
    if (t.expires_at > now) out.push_back(t.entry);
  }
  return out;
}

void Controller::attach(SbiEndpoint& ep, std::function<SimTime()> clock,
                        std::function<void(ShortAddr, std::vector<FlowEntry>)> push) {
  ResourceRouter& r = ep.resources();
  r.add("/network", Code::kPost, [this, clock, push](ShortAddr, const SbiMessage& req) {
    NetworkResult res = handle_network_post(decode_topology_report(req.payload), clock());
    for (auto& [n, es] : res.pushes) push(n, std::move(es));
    return SbiResponse{res.code, res.settings ? encode_settings(*res.settings) : std::vector<std::uint8_t>{}};
  });
  r.add("/flow-engine", Code::kPost, [this, clock, push](ShortAddr, const SbiMessage& req) {
    FlowEngineResult res = handle_flow_engine_post(decode_table_miss(req.payload), clock());
    for (auto& [n, es] : res.pushes) push(n, std::move(es));
    if (!is_success(res.code)) return SbiResponse{res.code, {}};
    return SbiResponse{res.code, encode_flow_entries(res.response)};
  });
  r.add("/flow-engine", Code::kGet, [this, clock](ShortAddr src, const SbiMessage& req) {
    ShortAddr node = src;
    if (!req.payload.empty()) node.value = static_cast<std::uint16_t>(decode_uint(req.payload));
    return SbiResponse{Code::kContent, encode_flow_entries(handle_flow_engine_get(node, clock()))};
  });
}

}  // namespace sd6lo
