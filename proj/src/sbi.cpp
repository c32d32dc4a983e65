// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/sbi.hpp"

#include <algorithm>

#include "sd6lo/cbor.hpp"

namespace sd6lo {
namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(Errc::kMalformedPayload, why);
}

bool known_code(std::uint8_t c) {
  switch (static_cast<Code>(c)) {
    case Code::kEmpty:
    case Code::kGet:
    case Code::kPost:
    case Code::kPut:
    case Code::kDelete:
    case Code::kDeleted:
    case Code::kChanged:
    case Code::kContent:
    case Code::kNotFound:
    case Code::kInternalError:
      return true;
  }
  return false;
}

template <typename T>
T narrow(std::uint64_t v, std::uint64_t max, const char* what) {
  if (v > max) malformed(std::string(what) + " out of range");
  return static_cast<T>(v);
}

void write_rule(cbor::Writer& w, const Rule& r) {
  w.array(5);
  w.uint(static_cast<std::uint8_t>(r.field));
  w.uint(r.offset_bits);
  w.uint(r.size_bits);
  w.uint(static_cast<std::uint8_t>(r.op));
  w.uint(r.value);
}

Rule read_rule(cbor::Reader& r) {
  if (r.array() != 5) malformed("rule must have 5 elements");
  Rule out;
  out.field = static_cast<Field>(narrow<std::uint8_t>(r.uint(), kFieldCount - 1, "rule field"));
  out.offset_bits = narrow<std::uint16_t>(r.uint(), 0xFFFF, "rule offset");
  out.size_bits = narrow<std::uint8_t>(r.uint(), 64, "rule size");
  out.op = static_cast<Op>(narrow<std::uint8_t>(r.uint(), kOpCount - 1, "rule operator"));
  out.value = r.uint();
  if (!rule_valid(out)) malformed("rule violates its field window");
  return out;
}

bool has_field_operands(ActionType t) {
  return t == ActionType::kModify || t == ActionType::kDecrement || t == ActionType::kIncrement;
}

void write_action(cbor::Writer& w, const Action& a) {
  if (a.type == ActionType::kForward) {
    w.array(2);
    w.uint(static_cast<std::uint8_t>(a.type));
    w.uint(a.value);
  } else if (has_field_operands(a.type)) {
    w.array(5);
    w.uint(static_cast<std::uint8_t>(a.type));
    w.uint(static_cast<std::uint8_t>(a.field));
    w.uint(a.value);
    w.uint(a.offset_bits);
    w.uint(a.size_bits);
  } else {
    w.array(1);
    w.uint(static_cast<std::uint8_t>(a.type));
  }
}

Action read_action(cbor::Reader& r) {
  const std::size_t n = r.array();
  if (n == 0) malformed("empty action");
  Action a;
  a.type = static_cast<ActionType>(narrow<std::uint8_t>(r.uint(), kActionTypeCount - 1, "action type"));
  const std::size_t want = a.type == ActionType::kForward ? 2 : has_field_operands(a.type) ? 5 : 1;
  if (n != want) malformed(std::string(action_name(a.type)) + " has wrong operand count");
  if (a.type == ActionType::kForward) {
    a.value = narrow<std::uint64_t>(r.uint(), 0xFFFF, "next hop");
  } else if (want == 5) {
    a.field = static_cast<Field>(narrow<std::uint8_t>(r.uint(), kFieldCount - 1, "action field"));
    a.value = r.uint();
    a.offset_bits = narrow<std::uint16_t>(r.uint(), 0xFFFF, "action offset");
    a.size_bits = narrow<std::uint8_t>(r.uint(), 64, "action size");
  }
  if (!action_valid(a)) malformed(std::string(action_name(a.type)) + " operands invalid");
  return a;
}

void write_neighbor(cbor::Writer& w, const NeighborInfo& n) {
  w.array(3);
  w.uint(n.addr.value);
  w.sint(n.rssi_dbm);
  w.uint(n.etx_x128);
}

NeighborInfo read_neighbor(cbor::Reader& r) {
  if (r.array() != 3) malformed("neighbor tuple must have 3 elements");
  NeighborInfo n;
  n.addr.value = narrow<std::uint16_t>(r.uint(), 0xFFFF, "neighbor address");
  const std::int64_t rssi = r.sint();
  if (rssi < INT32_MIN || rssi > INT32_MAX) malformed("rssi out of range");
  n.rssi_dbm = static_cast<std::int32_t>(rssi);
  n.etx_x128 = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "etx");
  return n;
}

void write_key_features(cbor::Writer& w, const KeyFeatureSpec& spec) {
  w.array(spec.size());
  for (const auto& k : spec) {
    w.array(3);
    w.uint(static_cast<std::uint8_t>(k.field));
    w.uint(k.offset_bits);
    w.uint(k.size_bits);
  }
}

KeyFeatureSpec read_key_features(cbor::Reader& r) {
  KeyFeatureSpec spec(r.array());
  for (auto& k : spec) {
    if (r.array() != 3) malformed("key feature must have 3 elements");
    k.field = static_cast<Field>(narrow<std::uint8_t>(r.uint(), kFieldCount - 1, "key field"));
    k.offset_bits = narrow<std::uint16_t>(r.uint(), 0xFFFF, "key offset");
    k.size_bits = narrow<std::uint8_t>(r.uint(), 64, "key size");
    if (k.size_bits == 0 || k.offset_bits + k.size_bits > field_width(k.field)) {
      malformed("key feature window outside field");
    }
  }
  return spec;
}

}  // namespace

const char* code_name(Code c) {
  switch (c) {
    case Code::kEmpty: return "0.00";
    case Code::kGet: return "GET";
    case Code::kPost: return "POST";
    case Code::kPut: return "PUT";
    case Code::kDelete: return "DELETE";
    case Code::kDeleted: return "2.02";
    case Code::kChanged: return "2.04";
    case Code::kContent: return "2.05";
    case Code::kNotFound: return "4.04";
    case Code::kInternalError: return "5.00";
  }
  return "?";
}

std::size_t encoded_size(const SbiMessage& m) {
  std::size_t n = 4 + m.token.size();
  for (const auto& s : m.uri_path) n += 1 + s.size();
  if (!m.payload.empty()) n += 1 + m.payload.size();
  return n;
}

std::vector<std::uint8_t> encode_message(const SbiMessage& m) {
  if (m.token.size() > 8) malformed("token longer than 8 bytes");
  std::vector<std::uint8_t> out;
  out.reserve(encoded_size(m));
  out.push_back(static_cast<std::uint8_t>((1u << 6) | (static_cast<unsigned>(m.type) << 4) |
                                          m.token.size()));
  out.push_back(static_cast<std::uint8_t>(m.code));
  out.push_back(static_cast<std::uint8_t>(m.message_id >> 8));
  out.push_back(static_cast<std::uint8_t>(m.message_id & 0xFF));
  out.insert(out.end(), m.token.begin(), m.token.end());
  for (const auto& seg : m.uri_path) {
    if (seg.empty() || seg.size() > 254) malformed("uri segment length must be 1..254");
    out.push_back(static_cast<std::uint8_t>(seg.size()));
    out.insert(out.end(), seg.begin(), seg.end());
  }
  if (!m.payload.empty()) {
    out.push_back(0xFF);
    out.insert(out.end(), m.payload.begin(), m.payload.end());
  }
  return out;
}

SbiMessage decode_message(std::span<const std::uint8_t> in) {
  if (in.size() < 4) malformed("message shorter than base header");
  SbiMessage m;
  if ((in[0] >> 6) != 1) malformed("unsupported version");
  m.type = static_cast<MsgType>((in[0] >> 4) & 0x3);
  const std::size_t tkl = in[0] & 0x0F;
  if (tkl > 8) malformed("token length above 8");
  if (!known_code(in[1])) malformed("unknown code");
  m.code = static_cast<Code>(in[1]);
  m.message_id = static_cast<std::uint16_t>((in[2] << 8) | in[3]);
  std::size_t pos = 4;
  if (in.size() - pos < tkl) malformed("truncated token");
  m.token.assign(in.begin() + 4, in.begin() + static_cast<std::ptrdiff_t>(4 + tkl));
  pos += tkl;
  while (pos < in.size()) {
    const std::uint8_t b = in[pos++];
    if (b == 0xFF) {
      if (pos == in.size()) malformed("payload marker without payload");
      m.payload.assign(in.begin() + static_cast<std::ptrdiff_t>(pos), in.end());
      break;
    }
    if (b == 0 || in.size() - pos < b) malformed("bad uri segment");
    m.uri_path.emplace_back(in.begin() + static_cast<std::ptrdiff_t>(pos),
                            in.begin() + static_cast<std::ptrdiff_t>(pos + b));
    pos += b;
  }
  return m;
}

MessageCategory sbi_category(const std::vector<std::string>& path, Code code, bool is_response) {
  const std::string p = join_path(path);
  if (p == "/network") return MessageCategory::kTopologyUpdate;
  if (p == "/flow-engine" && code == Code::kPost) {
    return is_response ? MessageCategory::kTableMissResp : MessageCategory::kTableMissReq;
  }
  if (p == "/flow-table" && code == Code::kPut) return MessageCategory::kFlowPut;
  return MessageCategory::kOtherSbi;
}

KeyFeatureSpec default_key_features() {
  return {{Field::kMeshOrig, 0, 16}, {Field::kMeshFinal, 0, 16}};
}

std::vector<std::uint8_t> encode_flow_entries(std::span<const FlowEntry> entries) {
  cbor::Writer w;
  w.array(entries.size());
  for (const auto& e : entries) {
    w.array(5);
    w.uint(e.priority);
    w.array(e.rules.size());
    for (const auto& r : e.rules) write_rule(w, r);
    w.array(e.actions.size());
    for (const auto& a : e.actions) write_action(w, a);
    w.uint(e.ttl_s);
    w.uint(e.stats_counter);
  }
  return w.take();
}

std::vector<FlowEntry> decode_flow_entries(std::span<const std::uint8_t> bytes) {
  cbor::Reader r(bytes);
  std::vector<FlowEntry> out(r.array());
  for (auto& e : out) {
    if (r.array() != 5) malformed("flow entry must have 5 elements");
    e.priority = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "priority");
    e.rules.resize(r.array());
    for (auto& rule : e.rules) rule = read_rule(r);
    e.actions.resize(r.array());
    if (e.actions.empty()) malformed("flow entry without actions");
    for (auto& a : e.actions) a = read_action(r);
    e.ttl_s = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "ttl");
    e.lifetime_s = e.ttl_s;
    e.stats_counter = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "counter");
  }
  r.finish();
  return out;
}

std::vector<std::uint8_t> encode_topology_report(const TopologyReport& rep) {
  cbor::Writer w;
  w.array(4);
  w.uint(rep.node.value);
  w.uint(rep.battery_level);
  w.uint(rep.update_period_s);
  w.array(rep.neighbors.size());
  for (const auto& n : rep.neighbors) write_neighbor(w, n);
  return w.take();
}

TopologyReport decode_topology_report(std::span<const std::uint8_t> bytes) {
  cbor::Reader r(bytes);
  if (r.array() != 4) malformed("topology report must have 4 elements");
  TopologyReport rep;
  rep.node.value = narrow<std::uint16_t>(r.uint(), 0xFFFF, "node address");
  rep.battery_level = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "battery");
  rep.update_period_s = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "update period");
  rep.neighbors.resize(r.array());
  for (auto& n : rep.neighbors) n = read_neighbor(r);
  r.finish();
  return rep;
}

std::vector<std::uint8_t> encode_neighbors(std::span<const NeighborInfo> ns) {
  cbor::Writer w;
  w.array(ns.size());
  for (const auto& n : ns) write_neighbor(w, n);
  return w.take();
}

std::vector<NeighborInfo> decode_neighbors(std::span<const std::uint8_t> bytes) {
  cbor::Reader r(bytes);
  std::vector<NeighborInfo> out(r.array());
  for (auto& n : out) n = read_neighbor(r);
  r.finish();
  return out;
}

std::vector<std::uint8_t> encode_key_features(const KeyFeatureSpec& spec) {
  cbor::Writer w;
  write_key_features(w, spec);
  return w.take();
}

KeyFeatureSpec decode_key_features(std::span<const std::uint8_t> bytes) {
  cbor::Reader r(bytes);
  auto spec = read_key_features(r);
  r.finish();
  return spec;
}

std::vector<std::uint8_t> encode_table_miss(const TableMissReport& rep) {
  cbor::Writer w;
  w.array(2);
  w.uint(rep.node.value);
  if (const auto* values = std::get_if<std::vector<std::uint64_t>>(&rep.features)) {
    w.array(values->size());
    for (auto v : *values) w.uint(v);
  } else {
    w.bytes(std::get<std::vector<std::uint8_t>>(rep.features));
  }
  return w.take();
}

TableMissReport decode_table_miss(std::span<const std::uint8_t> bytes) {
  cbor::Reader r(bytes);
  if (r.array() != 2) malformed("table-miss report must have 2 elements");
  TableMissReport rep;
  rep.node.value = narrow<std::uint16_t>(r.uint(), 0xFFFF, "node address");
  if (r.peek() == cbor::Major::kBytes) {
    rep.features = r.bytes();
  } else {
    std::vector<std::uint64_t> values(r.array());
    for (auto& v : values) v = r.uint();
    rep.features = std::move(values);
  }
  r.finish();
  return rep;
}

std::vector<std::uint8_t> encode_settings(const NodeSettings& s) {
  cbor::Writer w;
  w.map(static_cast<std::size_t>(s.update_period_s.has_value()) + s.key_features.has_value() +
        s.default_ttl_s.has_value());
  if (s.update_period_s) {
    w.uint(1);
    w.uint(*s.update_period_s);
  }
  if (s.key_features) {
    w.uint(2);
    write_key_features(w, *s.key_features);
  }
  if (s.default_ttl_s) {
    w.uint(3);
    w.uint(*s.default_ttl_s);
  }
  return w.take();
}

NodeSettings decode_settings(std::span<const std::uint8_t> bytes) {
  cbor::Reader r(bytes);
  NodeSettings s;
  const std::size_t n = r.map();
  std::uint64_t last_key = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t key = r.uint();
    if (key <= last_key) malformed("settings keys must be ascending");
    last_key = key;
    switch (key) {
      case 1: s.update_period_s = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "update period"); break;
      case 2: s.key_features = read_key_features(r); break;
      case 3: s.default_ttl_s = narrow<std::uint32_t>(r.uint(), 0xFFFFFFFF, "default ttl"); break;
      default: malformed("unknown settings key " + std::to_string(key));
    }
  }
  r.finish();
  return s;
}

std::vector<std::uint8_t> encode_uint(std::uint64_t v) {
  cbor::Writer w;
  w.uint(v);
  return w.take();
}

std::uint64_t decode_uint(std::span<const std::uint8_t> bytes) {
  cbor::Reader r(bytes);
  const auto v = r.uint();
  r.finish();
  return v;
}

std::vector<std::uint8_t> encode_frame_bytes(const Frame& f) {
  std::vector<std::uint8_t> out;
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  };
  put16(f.mac_src.value);
  put16(f.mac_dst.value);
  out.push_back(static_cast<std::uint8_t>((f.mesh ? 1 : 0) | (f.frag ? 2 : 0) |
                                          (f.frag && f.frag->is_first ? 4 : 0)));
  if (f.mesh) {
    out.push_back(f.mesh->hops_left);
    put16(f.mesh->originator.value);
    put16(f.mesh->final_addr.value);
  }
  if (f.frag) {
    put16(f.frag->datagram_size);
    put16(f.frag->tag);
    put16(f.frag->offset_units);
  }
  out.insert(out.end(), f.payload_window.begin(), f.payload_window.end());
  return out;
}

Frame decode_frame_bytes(std::span<const std::uint8_t> in) {
  std::size_t pos = 0;
  auto get16 = [&]() -> std::uint16_t {
    if (in.size() - pos < 2) malformed("truncated frame bytes");
    const auto v = static_cast<std::uint16_t>((in[pos] << 8) | in[pos + 1]);
    pos += 2;
    return v;
  };
  Frame f;
  f.mac_src.value = get16();
  f.mac_dst.value = get16();
  if (pos >= in.size()) malformed("truncated frame bytes");
  const std::uint8_t flags = in[pos++];
  if (flags > 7 || ((flags & 4) && !(flags & 2))) malformed("bad frame flags");
  if (flags & 1) {
    if (pos >= in.size()) malformed("truncated mesh header");
    MeshHeader m;
    m.hops_left = in[pos++];
    m.originator.value = get16();
    m.final_addr.value = get16();
    f.mesh = m;
  }
  if (flags & 2) {
    FragHeader h;
    h.datagram_size = get16();
    h.tag = get16();
    h.offset_units = get16();
    h.is_first = (flags & 4) != 0;
    f.frag = h;
  }
  f.payload_window.assign(in.begin() + static_cast<std::ptrdiff_t>(pos), in.end());
  return f;
}

std::vector<std::uint64_t> key_feature_values(const Frame& f, const KeyFeatureSpec& spec) {
  std::vector<std::uint64_t> out;
  out.reserve(spec.size());
  for (const auto& k : spec) out.push_back(read_window(f, k.field, k.offset_bits, k.size_bits).value_or(0));
  return out;
}

std::string join_path(const std::vector<std::string>& segments) {
  std::string out;
  for (const auto& s : segments) out += "/" + s;
  return out.empty() ? "/" : out;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const std::size_t j = path.find('/', i);
    out.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
    if (j == std::string::npos) break;
    i = j;
  }
  return out;
}

void ResourceRouter::add(const std::string& path, Code method, ResourceHandler h) {
  handlers_[{path, method}] = std::move(h);
}

bool ResourceRouter::has(const std::string& path, Code method) const {
  return handlers_.count({path, method}) != 0;
}

SbiResponse ResourceRouter::dispatch(ShortAddr src, const SbiMessage& req) const {
  auto it = handlers_.find({join_path(req.uri_path), req.code});
  if (it == handlers_.end()) return {Code::kNotFound, {}};
  try {
    return it->second(src, req);
  } catch (const Error& e) {
    if (e.code() == Errc::kMalformedPayload) return {Code::kInternalError, {}};
    throw;
  }
}

DedupVerdict DedupCache::check(ShortAddr src, std::uint16_t mid, SimTime now) {
  purge(now);
  return seen_.count({src.value, mid}) ? DedupVerdict::kDuplicate : DedupVerdict::kFresh;
}

void DedupCache::remember(ShortAddr src, std::uint16_t mid, SimTime now, SbiMessage response) {
  purge(now);
  const Key key{src.value, mid};
  seen_[key] = {now + lifetime_, std::move(response)};
  order_.emplace_back(now + lifetime_, key);
}

const SbiMessage* DedupCache::cached(ShortAddr src, std::uint16_t mid) const {
  auto it = seen_.find({src.value, mid});
  return it == seen_.end() ? nullptr : &it->second.second;
}

void DedupCache::purge(SimTime now) {
  while (!order_.empty() && order_.front().first <= now) {
    auto it = seen_.find(order_.front().second);
    // A key re-remembered later carries a later expiry; keep it.
    if (it != seen_.end() && it->second.first <= now) seen_.erase(it);
    order_.pop_front();
  }
}

SbiEndpoint::SbiEndpoint(EventQueue& events, SendFn send, RetxParams retx, SimTime dedup_lifetime)
    : events_(events), send_(std::move(send)), retx_(retx), dedup_(dedup_lifetime) {}

void SbiEndpoint::request(ShortAddr dst, Code code, std::vector<std::string> uri_path,
                          std::vector<std::uint8_t> payload, ResponseFn on_done) {
  // Skip ids still in flight after wrap-around.
  while (pending_.count(next_mid_)) ++next_mid_;
  const std::uint16_t mid = next_mid_++;
  const std::uint16_t tok = next_token_++;

  Pending p;
  p.dst = dst;
  p.msg.type = MsgType::kCon;
  p.msg.code = code;
  p.msg.message_id = mid;
  p.msg.token = {static_cast<std::uint8_t>(tok >> 8), static_cast<std::uint8_t>(tok & 0xFF)};
  p.msg.uri_path = std::move(uri_path);
  p.msg.payload = std::move(payload);
  p.category = sbi_category(p.msg.uri_path, code, false);
  p.timeout = retx_.ack_timeout;
  p.retries_left = retx_.max_retransmit;
  p.done = std::move(on_done);
  ++stats_.requests;

  auto& slot = pending_.emplace(mid, std::move(p)).first->second;
  transmit(slot);
}

void SbiEndpoint::transmit(Pending& p) {
  ++stats_.transmissions;
  const std::uint16_t mid = p.msg.message_id;
  p.timer = events_.schedule_in(p.timeout, [this, mid] { on_timeout(mid); });
  // send_ may re-enter receive() synchronously; copy what it needs first.
  const ShortAddr dst = p.dst;
  const SbiMessage msg = p.msg;
  const MessageCategory cat = p.category;
  send_(dst, msg, cat);
}

void SbiEndpoint::on_timeout(std::uint16_t mid) {
  auto it = pending_.find(mid);
  if (it == pending_.end()) return;
  Pending& p = it->second;
  if (p.retries_left > 0) {
    --p.retries_left;
    p.timeout *= 2;
    transmit(p);
    return;
  }
  ++stats_.timeouts;
  ResponseFn done = std::move(p.done);
  pending_.erase(it);
  if (done) done(std::nullopt);
}

void SbiEndpoint::receive(ShortAddr src, const SbiMessage& m) {
  if (m.type == MsgType::kAck || m.type == MsgType::kRst) {
    auto it = pending_.find(m.message_id);
    if (it == pending_.end() || it->second.dst != src) return;
    if (m.type == MsgType::kAck && it->second.msg.token != m.token) return;
    events_.cancel(it->second.timer);
    ResponseFn done = std::move(it->second.done);
    pending_.erase(it);
    if (done) done(m.type == MsgType::kAck ? std::optional<SbiMessage>(m) : std::nullopt);
    return;
  }

  const SimTime now = events_.now();
  if (dedup_.check(src, m.message_id, now) == DedupVerdict::kDuplicate) {
    ++stats_.duplicates;
    if (m.type == MsgType::kCon) {
      if (const SbiMessage* ack = dedup_.cached(src, m.message_id)) {
        send_(src, *ack, sbi_category(m.uri_path, m.code, true));
      }
    }
    return;
  }

  ++stats_.handler_invocations;
  SbiResponse resp = router_.dispatch(src, m);
  SbiMessage ack;
  ack.type = MsgType::kAck;
  ack.code = resp.code;
  ack.message_id = m.message_id;
  ack.token = m.token;
  ack.payload = std::move(resp.payload);
  dedup_.remember(src, m.message_id, now, ack);
  if (m.type == MsgType::kCon) send_(src, ack, sbi_category(m.uri_path, m.code, true));
}

}  // namespace sd6lo
