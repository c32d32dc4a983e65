// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "sd6lo/flow.hpp"
#include "sd6lo/rng.hpp"

using namespace sd6lo;

namespace {

// Node 3 sending toward node 7.
Frame fig3_frame() {
  Frame f;
  f.mac_src = ShortAddr{3};
  f.mac_dst = ShortAddr{5};
  f.mesh = MeshHeader{kInitialHopsLeft, {3}, {7}};
  f.payload_len = 50;
  f.payload_window.assign(16, 0);
  return f;
}

FlowEntry entry(std::uint32_t prio, std::vector<Rule> rules, std::vector<Action> actions, std::uint32_t ttl = 600) {
  FlowEntry e;
  e.priority = prio;
  e.rules = std::move(rules);
  e.actions = std::move(actions);
  e.ttl_s = ttl;
  return e;
}

Rule rule(Field f, Op op, std::uint64_t v, std::uint16_t off = 0, std::uint8_t size = 16) {
  return Rule{f, off, size, op, v};
}

}  // namespace

TEST_CASE("extract_window examples") {
  Frame f = fig3_frame();
  CHECK(extract_window(f, Field::kMeshFinal, 0, 16) == 0x0007);

  Frame zero;
  zero.mesh = MeshHeader{0, {0}, {0}};
  zero.frag = FragHeader{};
  zero.payload_window.assign(16, 0);
  for (Field fld : {Field::kMacSrc, Field::kMacDst, Field::kMeshOrig, Field::kMeshFinal, Field::kFragTag,
                    Field::kPayload}) {
    CHECK(extract_window(zero, fld, 0, 16) == 0);
  }

  Frame p;
  p.payload_window = {0xAB, 0xCD};
  CHECK(extract_window(p, Field::kPayload, 4, 8) == 0xBC);
}

TEST_CASE("extract_window errors") {
  Frame f;
  try {
    extract_window(f, Field::kMeshFinal, 0, 16);
    FAIL("expected FieldAbsent");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kFieldAbsent);
  }
  Frame g = fig3_frame();
  try {
    extract_window(g, Field::kMeshHopsLeft, 2, 4);
    FAIL("expected WindowOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kWindowOutOfRange);
  }
}

TEST_CASE("entry_matches examples") {
  Frame f = fig3_frame();
  CHECK(entry_matches(f, entry(1, {}, {Action::of(ActionType::kDrop)})));
  CHECK(entry_matches(f, entry(1, {rule(Field::kMeshFinal, Op::kEq, 7), rule(Field::kMeshHopsLeft, Op::kGt, 0, 0, 4)},
                               {Action::of(ActionType::kDrop)})));
  Frame bare;
  CHECK_FALSE(entry_matches(bare, entry(1, {rule(Field::kMeshFinal, Op::kEq, 7)}, {Action::of(ActionType::kDrop)})));
}

TEST_CASE("lookup: empty table misses") {
  FlowTable t;
  CHECK_FALSE(t.lookup(fig3_frame()).matched);
}

TEST_CASE("lookup: priority order") {
  FlowTable t;
  t.install(entry(100, {}, {Action::forward({2})}));
  t.install(entry(10, {rule(Field::kMeshFinal, Op::kEq, 5)}, {Action::forward({5})}));
  Frame f = fig3_frame();
  f.mesh->final_addr = ShortAddr{5};
  auto m = t.lookup(f);
  REQUIRE(m.matched);
  CHECK(m.plan == std::vector<Action>{Action::forward({5})});
  CHECK(t.entries()[0].priority == 10);
  CHECK(t.entries()[0].stats_counter == 1);
  CHECK(t.entries()[1].stats_counter == 0);
}

TEST_CASE("lookup: CONTINUE appends the next match") {
  FlowTable t;
  t.install(entry(9, {}, {Action::forward({0x42})}));
  t.install(entry(5, {}, {Action::increment(Field::kPayload, 1), Action::of(ActionType::kContinue)}));
  auto m = t.lookup(fig3_frame());
  REQUIRE(m.plan.size() == 3);
  CHECK(m.plan[0].type == ActionType::kIncrement);
  CHECK(m.plan[1].type == ActionType::kContinue);
  CHECK(m.plan[2] == Action::forward({0x42}));
  CHECK(m.hits == std::vector<std::size_t>{0, 1});
}

TEST_CASE("apply_actions examples") {
  Frame f = fig3_frame();
  std::vector<Action> plan{Action::decrement(Field::kMeshHopsLeft, 1), Action::forward({5})};
  auto r = apply_actions(f, plan);
  CHECK(r.kind == DispositionKind::kForward);
  CHECK(r.next_hop == ShortAddr{5});
  CHECK(r.frame.mesh->hops_left == 13);

  std::vector<Action> drop{Action::of(ActionType::kDrop), Action::forward({2})};
  auto d = apply_actions(f, drop);
  CHECK(d.kind == DispositionKind::kDropped);
  CHECK(d.diagnostics.empty());

  std::vector<Action> mod{Action::modify(Field::kMeshFinal, 0, 16, 9), Action::of(ActionType::kToUpperLayer)};
  auto m = apply_actions(f, mod);
  CHECK(m.kind == DispositionKind::kToUpper);
  CHECK(extract_window(m.frame, Field::kMeshFinal, 0, 16) == 9);
}

TEST_CASE("apply_actions: no disposition and absent fields") {
  Frame bare;
  bare.payload_window.assign(16, 0);
  std::vector<Action> plan{Action::decrement(Field::kMeshHopsLeft, 1), Action::of(ActionType::kContinue)};
  auto r = apply_actions(bare, plan);
  CHECK(r.kind == DispositionKind::kDropped);
  REQUIRE(r.diagnostics.size() == 2);
  CHECK(r.diagnostics.back() == "NoDisposition");
}

TEST_CASE("apply_actions: last disposition wins") {
  std::vector<Action> plan{Action::forward({5}), Action::of(ActionType::kBroadcast)};
  CHECK(apply_actions(fig3_frame(), plan).kind == DispositionKind::kBroadcast);
}

TEST_CASE("saturation of INCREMENT and DECREMENT") {
  Frame f = fig3_frame();
  for (std::uint64_t by : {1ull, 13ull, 14ull, 15ull, 1000ull}) {
    std::vector<Action> dec{Action::decrement(Field::kMeshHopsLeft, by), Action::of(ActionType::kBroadcast)};
    const auto r = apply_actions(f, dec);
    CHECK(r.frame.mesh->hops_left == (by >= 14 ? 0 : 14 - by));
    std::vector<Action> inc{Action::increment(Field::kMeshHopsLeft, by), Action::of(ActionType::kBroadcast)};
    const auto s = apply_actions(f, inc);
    CHECK(s.frame.mesh->hops_left == std::min<std::uint64_t>(15, 14 + by));
  }
  std::vector<Action> inc{Action::increment(Field::kMacSrc, 1u << 20), Action::of(ActionType::kBroadcast)};
  CHECK(apply_actions(f, inc).frame.mac_src.value == 0xFFFF);
  // A narrowed window saturates within its own width.
  Action narrow = Action::increment(Field::kMeshFinal, 100);
  narrow.offset_bits = 12;
  narrow.size_bits = 4;
  std::vector<Action> plan{narrow, Action::of(ActionType::kBroadcast)};
  CHECK(apply_actions(f, plan).frame.mesh->final_addr.value == 0x000F);
}

TEST_CASE("install: insert, replace, reject") {
  FlowTable t(40);
  CHECK(t.install(entry(10, {rule(Field::kMeshFinal, Op::kEq, 5)}, {Action::forward({5})})) ==
        InstallResult::kInstalled);
  CHECK(t.size() == 1);
  CHECK(t.install(entry(10, {rule(Field::kMeshFinal, Op::kEq, 5)}, {Action::forward({6})})) ==
        InstallResult::kReplaced);
  CHECK(t.size() == 1);
  Frame f = fig3_frame();
  f.mesh->final_addr = ShortAddr{5};
  CHECK(t.lookup(f).plan == std::vector<Action>{Action::forward({6})});

  for (std::uint16_t i = 0; t.size() < 40; ++i) {
    t.install(entry(20, {rule(Field::kMeshFinal, Op::kEq, 100u + i)}, {Action::forward({1})}));
  }
  CHECK(t.install(entry(20, {rule(Field::kMeshFinal, Op::kEq, 999)}, {Action::forward({1})})) ==
        InstallResult::kRejected);
  CHECK(t.size() == 40);
}

TEST_CASE("install: an entry at ttl 0 may be evicted") {
  FlowTable t(1);
  t.install(entry(1, {}, {Action::forward({1})}, 0));
  CHECK(t.install(entry(2, {}, {Action::forward({2})})) == InstallResult::kInstalled);
  CHECK(t.size() == 1);
  CHECK(t.entries()[0].priority == 2);
}

TEST_CASE("tick examples") {
  FlowTable t;
  t.install(entry(1, {}, {Action::forward({1})}, 600));
  auto gone = t.tick(600);
  CHECK(gone.size() == 1);
  CHECK(t.size() == 0);
  CHECK(t.tick(5).empty());

  t.install(entry(1, {rule(Field::kMacSrc, Op::kEq, 1)}, {Action::forward({1})}, 10));
  t.install(entry(1, {rule(Field::kMacSrc, Op::kEq, 2)}, {Action::forward({1})}, 600));
  gone = t.tick(10);
  REQUIRE(gone.size() == 1);
  CHECK(gone[0].ttl_s == 0);
  CHECK(gone[0].rules[0].value == 1);
  CHECK(t.size() == 1);
}

TEST_CASE("ttl is restored on each matching access") {
  FlowTable t;
  t.install(entry(1, {}, {Action::forward({1})}, 100));
  t.tick(90);
  CHECK(t.entries()[0].ttl_s == 10);
  t.lookup(fig3_frame());
  CHECK(t.entries()[0].ttl_s == 100);
}

TEST_CASE("lookup agrees with a brute-force evaluator") {
  Rng rng(7);
  std::uint64_t total_hits = 0;
  std::uint64_t counter_sum = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Frame f = gen::lookup_frame(rng);
    const std::vector<FlowEntry> in_order = gen::lookup_entries(rng, f);
    const std::vector<FlowEntry> model = gen::installed_model(in_order);
    FlowTable table(8);
    for (const FlowEntry& e : in_order) {
      const auto res = table.install(e, 0);
      REQUIRE(res != InstallResult::kRejected);
    }
    REQUIRE(table.size() == model.size());

    const auto expect = oracle::lookup(model, f);
    const auto got = table.lookup(f);
    REQUIRE(got.matched == expect.matched);
    REQUIRE(got.plan == expect.plan);
    REQUIRE(got.hits.size() == expect.hit_install_order.size());

    // Table order equals the model stably sorted by priority.
    std::vector<std::size_t> order(model.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return model[a].priority < model[b].priority; });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const bool hit = std::count(expect.hit_install_order.begin(), expect.hit_install_order.end(), order[pos]) > 0;
      REQUIRE(table.entries()[pos].stats_counter == (hit ? 1u : 0u));
      REQUIRE(table.entries()[pos].rules == model[order[pos]].rules);
      counter_sum += table.entries()[pos].stats_counter;
    }
    total_hits += got.hits.size();

    // Same input, same plan.
    FlowTable again = table;
    REQUIRE(again.lookup(f).plan == got.plan);
  }
  CHECK(counter_sum == total_hits);
}

TEST_CASE("DROP before any disposition always drops") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Action> plan;
    const auto before = rng.uniform_int(0, 3);
    for (std::int64_t i = 0; i < before; ++i) {
      plan.push_back(rng.bernoulli(0.5) ? Action::decrement(Field::kMeshHopsLeft, 1)
                                        : Action::of(ActionType::kContinue));
    }
    plan.push_back(Action::of(ActionType::kDrop));
    const auto after = rng.uniform_int(0, 3);
    for (std::int64_t i = 0; i < after; ++i) plan.push_back(Action::forward({1}));
    REQUIRE(apply_actions(fig3_frame(), plan).kind == DispositionKind::kDropped);
  }
}

TEST_CASE("validity checks") {
  CHECK(rule_valid(rule(Field::kMeshHopsLeft, Op::kEq, 3, 0, 4)));
  CHECK_FALSE(rule_valid(rule(Field::kMeshHopsLeft, Op::kEq, 3, 0, 5)));
  CHECK_FALSE(rule_valid(rule(Field::kMeshHopsLeft, Op::kEq, 16, 0, 4)));
  CHECK(rule_valid(rule(Field::kPayload, Op::kEq, 1, 120, 8)));
  CHECK_FALSE(rule_valid(rule(Field::kPayload, Op::kEq, 1, 121, 8)));
  CHECK_FALSE(entry_valid(entry(1, {}, {})));
  CHECK(entry_valid(entry(1, {}, {Action::of(ActionType::kDrop)})));
  CHECK_FALSE(action_valid(Action::modify(Field::kMeshHopsLeft, 0, 4, 16)));
  CHECK_FALSE(action_valid(Action::increment(Field::kPayload, 1)));
}
