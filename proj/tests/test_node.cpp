// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "sd6lo/node.hpp"

using namespace sd6lo;

TEST_CASE("etx examples") {
  CHECK(etx_update(128, 1) == 128);
  CHECK(etx_update(128, 2) == 141);
  std::uint32_t e = 128;
  for (int i = 0; i < 60; ++i) e = etx_update(e, 2);
  CHECK(e >= 255);
  CHECK(e <= 257);
  // Ceiling form against exact rational arithmetic.
  for (std::uint32_t etx = 128; etx <= kEtxCap; etx += 7) {
    for (int att = 1; att <= 5; ++att) {
      const double exact = 0.9 * etx + 0.1 * (att * 128.0);
      const auto expect = std::min<std::uint32_t>(kEtxCap, static_cast<std::uint32_t>(std::ceil(exact - 1e-9)));
      REQUIRE(etx_update(etx, att) == expect);
    }
  }
  CHECK(etx_update(kEtxCap, 5) <= kEtxCap);
}

TEST_CASE("neighbor table examples") {
  NeighborTable t;
  CHECK(t.overhear(ShortAddr{4}, -60, 0));
  CHECK(t.etx(ShortAddr{4}) == 128);
  CHECK_FALSE(t.overhear(ShortAddr{4}, -61, seconds(10)));
  CHECK(t.size() == 1);
  CHECK(t.find(ShortAddr{4})->last_heard == seconds(10));
  t.record_attempts(ShortAddr{4}, 2);
  CHECK(t.etx(ShortAddr{4}) == 141);
  CHECK(t.purge(seconds(5000), seconds(2400)).size() == 1);
  CHECK(t.overhear(ShortAddr{4}, -60, seconds(5001)));
  CHECK(t.etx(ShortAddr{4}) == 128);
}

TEST_CASE("rpl_on_dio examples") {
  RplState s;
  CHECK(rpl_on_dio(s, ShortAddr{1}, kRootRank, 128) == DioOutcome::kParentAdopted);
  CHECK(s.parent == ShortAddr{1});
  CHECK(s.rank == 384);

  CHECK(rpl_on_dio(s, ShortAddr{9}, 512, 128) == DioOutcome::kIgnored);
  CHECK(s.parent == ShortAddr{1});

  RplState far;
  far.parent = ShortAddr{7};
  far.rank = 640;
  far.parent_rank = 512;
  CHECK(rpl_on_dio(far, ShortAddr{2}, 256, 128) == DioOutcome::kParentSwitched);
  CHECK(far.parent == ShortAddr{2});
  CHECK(far.rank == 384);

  RplState near;
  near.parent = ShortAddr{7};
  near.rank = 576;
  CHECK(rpl_on_dio(near, ShortAddr{2}, 256, 128) == DioOutcome::kNoChange);

  RplState root;
  root.is_root = true;
  root.rank = kRootRank;
  CHECK(rpl_on_dio(root, ShortAddr{2}, 256, 128) == DioOutcome::kIgnored);
}

TEST_CASE("trickle doubles to 1024 s and fires in the second half") {
  Trickle t(seconds(4), 8);
  CHECK(t.i_max() == seconds(1024));
  Rng rng(3);
  for (int i = 0; i < 12; ++i) {
    for (int k = 0; k < 50; ++k) {
      const SimTime off = t.draw_fire_offset(rng);
      REQUIRE(off >= t.interval() / 2);
      REQUIRE(off < t.interval());
    }
    t.expire();
  }
  CHECK(t.interval() == seconds(1024));
  t.reset();
  CHECK(t.interval() == seconds(4));
}

TEST_CASE("bootstrap entries") {
  const std::vector<ShortAddr> nbrs{ShortAddr{1}, ShortAddr{8}};
  auto e = bootstrap_entries(ShortAddr{1}, nbrs, 1200);
  REQUIRE(e.size() == 3);
  CHECK(e[0].priority == kOneHopPriority);
  CHECK(e[0].ttl_s == 2400);
  CHECK(e[0].actions[0] == Action::decrement(Field::kMeshHopsLeft, 1));
  CHECK(e[0].actions[1] == Action::forward({1}));
  CHECK(e[2].priority == kUpstreamPriority);
  CHECK(e.back().actions.back() == Action::forward({1}));

  FlowTable t;
  for (auto& x : e) t.install(x);
  for (auto& x : bootstrap_entries(ShortAddr{8}, nbrs, 1200)) t.install(x);
  CHECK(t.size() == 3);
  CHECK(t.entries().back().actions.back() == Action::forward({8}));

  CHECK(bootstrap_entries(std::nullopt, nbrs, 1200).size() == 2);
}

TEST_CASE("routing table capacity and expiry") {
  RoutingTable r(40);
  for (std::uint16_t i = 0; i < 40; ++i) {
    REQUIRE(r.upsert(ShortAddr{static_cast<std::uint16_t>(100 + i)}, ShortAddr{2}, seconds(180)) ==
            RoutingTable::Result::kInserted);
  }
  CHECK(r.upsert(ShortAddr{999}, ShortAddr{2}, seconds(180)) == RoutingTable::Result::kRejected);
  CHECK(r.upsert(ShortAddr{100}, ShortAddr{3}, seconds(200)) == RoutingTable::Result::kRefreshed);
  CHECK(r.next_hop(ShortAddr{100}, seconds(10)) == ShortAddr{3});
  CHECK_FALSE(r.next_hop(ShortAddr{101}, seconds(180)).has_value());
  CHECK(r.purge(seconds(190)) == 39);
}

TEST_CASE("app body round trip") {
  AppBody b{true, 77, 0x0102030405060708ull};
  auto back = decode_app_body(encode_app_body(b));
  REQUIRE(back.has_value());
  CHECK(back->is_reply);
  CHECK(back->seq == 77);
  CHECK(back->request_id == b.request_id);
  CHECK_FALSE(decode_app_body(std::vector<std::uint8_t>{2}).has_value());
}

namespace {

// Records everything a node asks of its environment; the MAC succeeds at once.
struct FakeEnv : NodeEnv {
  EventQueue q;
  Rng r{1};
  std::uint64_t ids = 1;
  struct Sent {
    SimTime at;
    Frame frame;
  };
  std::vector<Sent> sent;
  std::vector<Datagram> created;
  std::map<std::string, int> diags;
  int misses = 0;

  EventQueue& events() override { return q; }
  Rng& rng() override { return r; }
  std::uint64_t next_datagram_id() override { return ids++; }
  void mac_send(ShortAddr, Frame f, std::function<void(int)> done) override {
    sent.push_back({q.now(), f});
    if (done) done(1);
  }
  void external_send(DatagramPtr) override {}
  void datagram_created(ShortAddr, const Datagram& d) override { created.push_back(d); }
  void table_miss_requested(ShortAddr) override { ++misses; }
  void rtt_sample(ShortAddr, ShortAddr, SimTime, SimTime, std::uint64_t, std::uint64_t) override {}
  void diagnostic(ShortAddr, const std::string& cause) override { ++diags[cause]; }

  std::vector<SbiMessage> sbi_sent(const std::string& path) const {
    std::vector<SbiMessage> out;
    for (const auto& s : sent) {
      if (!s.frame.datagram || s.frame.datagram->kind != DatagramKind::kSbi) continue;
      auto m = decode_message(s.frame.datagram->body);
      if (join_path(m.uri_path) == path) out.push_back(m);
    }
    return out;
  }
};

Frame dio_from(ShortAddr sender, std::uint32_t rank, ShortAddr root) {
  auto d = std::make_shared<Datagram>();
  d->kind = DatagramKind::kRplDio;
  d->src = sender;
  d->dst = kBroadcastAddr;
  d->app_payload_len = 66;
  d->body = {static_cast<std::uint8_t>(rank >> 8), static_cast<std::uint8_t>(rank & 0xFF),
             static_cast<std::uint8_t>(root.value >> 8), static_cast<std::uint8_t>(root.value & 0xFF)};
  Frame f;
  f.mac_src = sender;
  f.mac_dst = kBroadcastAddr;
  f.payload_len = 76;
  f.datagram = d;
  return f;
}

Frame data_frame(ShortAddr from, ShortAddr orig, ShortAddr fin, std::uint64_t id) {
  auto d = std::make_shared<Datagram>();
  d->id = id;
  d->src = orig;
  d->dst = fin;
  d->app_payload_len = 40;
  d->body = encode_app_body({false, 1, id});
  auto frames = fragment(d, MeshHeader{kInitialHopsLeft, orig, fin}, LinkLimits{}, 1);
  frames[0].mac_src = from;
  return frames[0];
}

Frame sbi_frame_to(ShortAddr node, const SbiMessage& m) {
  auto d = std::make_shared<Datagram>();
  d->src = kControllerAddr;
  d->dst = node;
  d->kind = DatagramKind::kSbi;
  d->body = encode_message(m);
  d->app_payload_len = static_cast<std::uint16_t>(d->body.size());
  auto frames = fragment(d, MeshHeader{kInitialHopsLeft, kControllerAddr, node}, LinkLimits{}, 3);
  REQUIRE(frames.size() == 1);
  frames[0].mac_src = ShortAddr{1};
  return frames[0];
}

struct Fixture {
  StackParams params;
  FakeEnv env;
  std::unique_ptr<Node> node;

  explicit Fixture(StackMode mode = StackMode::kSdn) {
    params.mode = mode;
    node = std::make_unique<Node>(NodeConfig{ShortAddr{5}, NodeRole::kForwarder, std::nullopt}, params, env);
    node->on_overhear(ShortAddr{1}, -50);
    node->on_receive(dio_from(ShortAddr{1}, kRootRank, ShortAddr{1}));
  }
};

}  // namespace

TEST_CASE("node joins under the root and installs its upstream entry") {
  Fixture fx;
  CHECK(fx.node->rpl().parent == ShortAddr{1});
  CHECK(fx.node->rpl().rank == 384);
  const auto entries = fx.node->flow_table().entries();
  REQUIRE(entries.size() == 2);  // one-hop to 1, upstream via 1
  CHECK(entries[1].priority == kUpstreamPriority);
  CHECK(entries[1].rules[0].value == kControllerAddr.value);
}

TEST_CASE("self-addressed frames and DIOs bypass the flow table") {
  Fixture fx;
  const auto before = fx.node->flow_lookups();
  // A reply frame so that nothing is originated in response.
  auto d = std::make_shared<Datagram>();
  d->id = 40;
  d->src = ShortAddr{9};
  d->dst = ShortAddr{5};
  d->app_payload_len = 40;
  d->body = encode_app_body({true, 1, 1});
  Frame f = fragment(d, MeshHeader{kInitialHopsLeft, ShortAddr{9}, ShortAddr{5}}, LinkLimits{}, 1)[0];
  f.mac_src = ShortAddr{1};
  fx.node->on_receive(f);
  CHECK(fx.env.diags["UnmatchedReply"] == 1);
  fx.node->on_receive(dio_from(ShortAddr{1}, kRootRank, ShortAddr{1}));
  CHECK(fx.node->flow_lookups() == before);
}

TEST_CASE("a request addressed to the node is echoed") {
  Fixture fx;
  fx.node->on_receive(data_frame(ShortAddr{1}, ShortAddr{9}, ShortAddr{5}, 40));
  CHECK(std::any_of(fx.env.created.begin(), fx.env.created.end(),
                    [](const Datagram& d) { return d.dst == ShortAddr{9} && d.kind == DatagramKind::kUdpData; }));
}

TEST_CASE("table miss: coalescing, queue cap, install and re-dispatch") {
  Fixture fx;
  fx.env.sent.clear();
  for (std::uint64_t i = 0; i < 5; ++i) fx.node->on_receive(data_frame(ShortAddr{1}, ShortAddr{3}, ShortAddr{7}, 100 + i));
  CHECK(fx.env.misses == 1);
  CHECK(fx.node->miss_queue_size() == 4);
  CHECK(fx.env.diags["MissQueueFull"] == 1);

  const auto posts = fx.env.sbi_sent("/flow-engine");
  REQUIRE(posts.size() == 1);
  const auto rep = decode_table_miss(posts[0].payload);
  CHECK(rep.node == ShortAddr{5});
  CHECK(std::get<std::vector<std::uint64_t>>(rep.features) == std::vector<std::uint64_t>{3, 7});
  // The request climbs toward the controller through the parent.
  CHECK(fx.env.sent.back().frame.mac_dst == ShortAddr{1});
  CHECK(fx.env.sent.back().frame.mesh->final_addr == kControllerAddr);

  FlowEntry e;
  e.priority = 100;
  e.rules = {Rule{Field::kMeshFinal, 0, 16, Op::kEq, 7}};
  e.actions = {Action::decrement(Field::kMeshHopsLeft, 1), Action::forward({7})};
  e.ttl_s = 600;
  SbiMessage ack;
  ack.type = MsgType::kAck;
  ack.code = Code::kChanged;
  ack.message_id = posts[0].message_id;
  ack.token = posts[0].token;
  std::vector<FlowEntry> es{e};
  ack.payload = encode_flow_entries(es);
  fx.env.sent.clear();
  fx.node->on_receive(sbi_frame_to(ShortAddr{5}, ack));
  fx.env.q.run_until(fx.env.q.now() + millis(5));
  CHECK(fx.node->miss_queue_size() == 0);
  int forwarded = 0;
  for (const auto& s : fx.env.sent) {
    if (s.frame.mac_dst == ShortAddr{7}) {
      ++forwarded;
      CHECK(s.frame.mesh->hops_left == kInitialHopsLeft - 1);
    }
  }
  CHECK(forwarded == 4);

  // The next frame matches directly.
  fx.env.sent.clear();
  fx.node->on_receive(data_frame(ShortAddr{1}, ShortAddr{3}, ShortAddr{7}, 200));
  fx.env.q.run_until(fx.env.q.now() + millis(5));
  CHECK(fx.env.misses == 1);
  REQUIRE(fx.env.sent.size() == 1);
  CHECK(fx.env.sent[0].frame.mac_dst == ShortAddr{7});
}

TEST_CASE("table miss timeout drops the buffered frames") {
  Fixture fx;
  fx.node->on_receive(data_frame(ShortAddr{1}, ShortAddr{3}, ShortAddr{7}, 100));
  fx.node->on_receive(data_frame(ShortAddr{1}, ShortAddr{3}, ShortAddr{7}, 101));
  fx.env.q.run_until(seconds(70));
  CHECK(fx.env.diags["MissTimeout"] == 2);
  CHECK(fx.node->miss_queue_size() == 0);
}

TEST_CASE("topology report lists every neighbor") {
  Fixture fx;
  fx.node->on_overhear(ShortAddr{6}, -70);
  fx.node->on_overhear(ShortAddr{8}, -72);
  fx.env.q.run_until(seconds(10));
  auto posts = fx.env.sbi_sent("/network");
  REQUIRE_FALSE(posts.empty());
  // Unanswered, the same message is retransmitted.
  for (const auto& p : posts) CHECK(p.message_id == posts[0].message_id);
  const auto rep = decode_topology_report(posts[0].payload);
  CHECK(rep.node == ShortAddr{5});
  CHECK(rep.battery_level == 100);
  REQUIRE(rep.neighbors.size() == 3);
  CHECK(rep.neighbors[1].addr == ShortAddr{6});
  CHECK(rep.neighbors[1].rssi_dbm == -70);
  CHECK(rep.neighbors[1].etx_x128 == 128);

  // A settings response with a new period moves the next report.
  SbiMessage ack;
  ack.type = MsgType::kAck;
  ack.code = Code::kChanged;
  ack.message_id = posts[0].message_id;
  ack.token = posts[0].token;
  NodeSettings s;
  s.update_period_s = 600;
  ack.payload = encode_settings(s);
  const SimTime answered = fx.env.q.now();
  fx.node->on_receive(sbi_frame_to(ShortAddr{5}, ack));
  CHECK(fx.node->update_period_s() == 600);
  fx.env.sent.clear();
  fx.env.q.run_until(answered + seconds(539));
  CHECK(fx.env.sbi_sent("/network").empty());
  fx.env.q.run_until(answered + seconds(661));
  CHECK_FALSE(fx.env.sbi_sent("/network").empty());
}

TEST_CASE("node resources over SBI") {
  Fixture fx;
  auto call = [&](Code code, const std::string& path, std::vector<std::uint8_t> payload, std::uint16_t mid) {
    SbiMessage m;
    m.type = MsgType::kCon;
    m.code = code;
    m.message_id = mid;
    m.token = {static_cast<std::uint8_t>(mid)};
    m.uri_path = split_path(path);
    m.payload = std::move(payload);
    fx.env.sent.clear();
    fx.node->on_receive(sbi_frame_to(ShortAddr{5}, m));
    for (const auto& s : fx.env.sent) {
      if (s.frame.datagram && s.frame.datagram->kind == DatagramKind::kSbi) return decode_message(s.frame.datagram->body);
    }
    FAIL("no response");
    return SbiMessage{};
  };
  auto nb = call(Code::kGet, "/neighbors", {}, 900);
  CHECK(nb.code == Code::kContent);
  CHECK(decode_neighbors(nb.payload).size() == 1);

  CHECK(decode_flow_entries(call(Code::kGet, "/flow-table", {}, 901).payload).size() == 2);
  fx.node->flow_table().install(one_hop_entry(ShortAddr{77}, 600));
  CHECK(fx.node->flow_table().size() == 3);
  CHECK(call(Code::kDelete, "/flow-table", {}, 902).code == Code::kDeleted);
  // Controller entries are gone; the local bootstrap entries are reinstalled.
  CHECK(fx.node->flow_table().size() == 2);

  CHECK(call(Code::kPost, "/update-period", encode_uint(300), 903).code == Code::kChanged);
  CHECK(decode_uint(call(Code::kGet, "/update-period", {}, 904).payload) == 300);

  KeyFeatureSpec spec{{Field::kMeshFinal, 0, 16}};
  CHECK(call(Code::kPost, "/key-feature", encode_key_features(spec), 905).code == Code::kChanged);
  CHECK(fx.node->key_features() == spec);
  CHECK(call(Code::kPost, "/no-such", {}, 906).code == Code::kNotFound);
}

TEST_CASE("whole-frame miss reports when the key spec is empty") {
  Fixture fx;
  fx.node->on_receive(sbi_frame_to(ShortAddr{5}, [] {
    SbiMessage m;
    m.type = MsgType::kNon;
    m.code = Code::kPost;
    m.message_id = 950;
    m.uri_path = {"key-feature"};
    m.payload = encode_key_features({});
    return m;
  }()));
  CHECK(fx.node->key_features().empty());
  fx.node->on_receive(data_frame(ShortAddr{1}, ShortAddr{3}, ShortAddr{7}, 100));
  const auto posts = fx.env.sbi_sent("/flow-engine");
  REQUIRE(posts.size() == 1);
  const auto rep = decode_table_miss(posts[0].payload);
  const auto& raw = std::get<std::vector<std::uint8_t>>(rep.features);
  const Frame back = decode_frame_bytes(raw);
  CHECK(back.mesh->final_addr == ShortAddr{7});
}

TEST_CASE("SDN nodes never create DAOs; baseline nodes do") {
  {
    Fixture fx;
    fx.node->start();
    fx.env.q.run_until(seconds(600));
    CHECK(std::none_of(fx.env.created.begin(), fx.env.created.end(),
                       [](const Datagram& d) { return d.kind == DatagramKind::kRplDao; }));
  }
  {
    Fixture fx(StackMode::kRplBaseline);
    fx.node->start();
    fx.env.q.run_until(seconds(600));
    const auto daos = std::count_if(fx.env.created.begin(), fx.env.created.end(),
                                    [](const Datagram& d) { return d.kind == DatagramKind::kRplDao; });
    CHECK(daos >= 9);
    CHECK(daos <= 10);
  }
}

TEST_CASE("baseline DAO processing stores and re-advertises") {
  Fixture fx(StackMode::kRplBaseline);
  auto dao = [&](ShortAddr child, ShortAddr target) {
    auto d = std::make_shared<Datagram>();
    d->kind = DatagramKind::kRplDao;
    d->src = child;
    d->dst = ShortAddr{5};
    d->app_payload_len = 30;
    d->body = {static_cast<std::uint8_t>(target.value >> 8), static_cast<std::uint8_t>(target.value & 0xFF)};
    auto frames = fragment(d, std::nullopt, LinkLimits{}, 1);
    frames[0].mac_src = child;
    frames[0].mac_dst = ShortAddr{5};
    return frames[0];
  };
  fx.env.sent.clear();
  fx.node->on_receive(dao(ShortAddr{9}, ShortAddr{9}));
  CHECK(fx.node->routing_table().next_hop(ShortAddr{9}, 0) == ShortAddr{9});
  REQUIRE(fx.env.sent.size() == 1);
  CHECK(fx.env.sent[0].frame.mac_dst == ShortAddr{1});
  CHECK(fx.env.sent[0].frame.datagram->kind == DatagramKind::kRplDao);

  // Route-over: known destination goes down, unknown goes up.
  fx.env.sent.clear();
  fx.node->on_receive([&] {
    auto d = std::make_shared<Datagram>();
    d->src = ShortAddr{1};
    d->dst = ShortAddr{9};
    d->app_payload_len = 40;
    d->body = encode_app_body({false, 1, 1});
    auto f = fragment(d, std::nullopt, LinkLimits{}, 2)[0];
    f.mac_src = ShortAddr{1};
    return f;
  }());
  fx.env.q.run_until(fx.env.q.now() + millis(10));
  REQUIRE_FALSE(fx.env.sent.empty());
  CHECK(fx.env.sent.back().frame.mac_dst == ShortAddr{9});
}
