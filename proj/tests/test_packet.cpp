// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sd6lo/packet.hpp"
#include "sd6lo/rng.hpp"

using namespace sd6lo;

namespace {

DatagramPtr make_datagram(std::size_t compressed_total, std::uint16_t src = 3, std::uint16_t dst = 7) {
  auto d = std::make_shared<Datagram>();
  d->id = 1;
  d->src = ShortAddr{src};
  d->dst = ShortAddr{dst};
  d->compressed_header_len = 10;
  if (compressed_total >= 10) {
    d->app_payload_len = static_cast<std::uint16_t>(compressed_total - 10);
  } else {
    d->compressed_header_len = static_cast<std::uint16_t>(compressed_total);
  }
  for (std::size_t i = 0; i < 20; ++i) d->body.push_back(static_cast<std::uint8_t>(0x10 + i));
  return d;
}

MeshHeader mesh(std::uint16_t o = 3, std::uint16_t f = 7) { return MeshHeader{kInitialHopsLeft, {o}, {f}}; }

}  // namespace

TEST_CASE("fragment: 50-byte datagram fits one frame") {
  auto frames = fragment(make_datagram(50), mesh(), LinkLimits{}, 1);
  REQUIRE(frames.size() == 1);
  CHECK_FALSE(frames[0].frag.has_value());
  CHECK(frames[0].payload_len == 50);
  CHECK(on_air_bytes(frames[0]) == 66);
}

TEST_CASE("fragment: 300-byte datagram splits 104/104/92") {
  auto frames = fragment(make_datagram(300), mesh(), LinkLimits{}, 9);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].payload_len == 104);
  CHECK(frames[1].payload_len == 104);
  CHECK(frames[2].payload_len == 92);
  CHECK(frames[0].frag->is_first);
  CHECK(frames[0].frag->encoded_size() == 4);
  CHECK(frames[1].frag->encoded_size() == 5);
  CHECK(on_air_bytes(frames[0]) == 124);
  for (const Frame& f : frames) {
    CHECK(f.frag->tag == 9);
    CHECK(f.frag->datagram_size == 300);
    CHECK(f.mesh == frames[0].mesh);
  }
}

TEST_CASE("fragment: 1-byte datagram") {
  auto frames = fragment(make_datagram(1), mesh(), LinkLimits{}, 1);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].payload_len == 1);
  CHECK_FALSE(frames[0].frag.has_value());
}

TEST_CASE("fragment: oversize datagram is rejected") {
  auto d = std::make_shared<Datagram>();
  d->app_payload_len = 2040;
  d->compressed_header_len = 10;
  try {
    fragment(d, mesh(), LinkLimits{}, 1);
    FAIL("expected DatagramTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDatagramTooLarge);
  }
}

TEST_CASE("on_air_bytes: DIO without mesh header") {
  auto d = std::make_shared<Datagram>();
  d->kind = DatagramKind::kRplDio;
  d->app_payload_len = 66;
  auto frames = fragment(d, std::nullopt, LinkLimits{}, 0);
  REQUIRE(frames.size() == 1);
  CHECK(on_air_bytes(frames[0]) == 87);
}

TEST_CASE("fragment count matches packing oracle for every size") {
  for (bool with_mesh : {false, true}) {
    for (std::size_t total = 1; total <= kMaxDatagramSize; ++total) {
      const auto pieces = oracle::pack(total, with_mesh);
      REQUIRE(fragment_count(total, with_mesh) == pieces.size());
      auto frames = fragment(make_datagram(total), with_mesh ? std::optional(mesh()) : std::nullopt, LinkLimits{}, 2);
      REQUIRE(frames.size() == pieces.size());
      std::size_t sum = 0;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        REQUIRE(frames[i].payload_len == pieces[i]);
        REQUIRE(on_air_bytes(frames[i]) <= 127);
        if (i + 1 < frames.size()) REQUIRE(frames[i].payload_len % 8 == 0);
        sum += frames[i].payload_len;
      }
      REQUIRE(sum == total);
    }
  }
}

TEST_CASE("fragment budget closed form") {
  const FragmentBudget b = fragment_budget(true);
  CHECK(b.whole == 111);
  CHECK(b.first == 104);
  CHECK(b.subsequent == 104);
  const FragmentBudget nb = fragment_budget(false);
  CHECK(nb.whole == 116);
  CHECK(nb.first == 112);
  CHECK(nb.subsequent == 104);
}

TEST_CASE("reassembly: whole frame completes immediately") {
  ReassemblyBuffer buf;
  auto frames = fragment(make_datagram(50), mesh(), LinkLimits{}, 1);
  CHECK(buf.add(frames[0], 0).status == ReassemblyStatus::kComplete);
}

TEST_CASE("reassembly: out of order 2,1,3") {
  ReassemblyBuffer buf;
  auto d = make_datagram(300);
  auto frames = fragment(d, mesh(), LinkLimits{}, 4);
  CHECK(buf.add(frames[1], 0).status == ReassemblyStatus::kIncomplete);
  CHECK(buf.add(frames[0], 1).status == ReassemblyStatus::kIncomplete);
  auto r = buf.add(frames[2], 2);
  CHECK(r.status == ReassemblyStatus::kComplete);
  CHECK(r.datagram == d);
  CHECK(buf.pending() == 0);
}

TEST_CASE("reassembly: duplicate first fragment yields one completion") {
  ReassemblyBuffer buf;
  auto frames = fragment(make_datagram(300), mesh(), LinkLimits{}, 4);
  int completes = 0;
  for (int i : {0, 0, 1, 2}) {
    if (buf.add(frames[static_cast<std::size_t>(i)], 0).status == ReassemblyStatus::kComplete) ++completes;
  }
  CHECK(completes == 1);
}

TEST_CASE("reassembly: stale buffer and inconsistent size") {
  ReassemblyBuffer buf(seconds(8));
  auto frames = fragment(make_datagram(300), mesh(), LinkLimits{}, 4);
  CHECK(buf.add(frames[0], 0).status == ReassemblyStatus::kIncomplete);
  CHECK(buf.add(frames[1], seconds(9)).status == ReassemblyStatus::kStale);

  ReassemblyBuffer b2;
  auto other = fragment(make_datagram(400), mesh(), LinkLimits{}, 4);
  b2.add(frames[0], 0);
  try {
    b2.add(other[1], 0);
    FAIL("expected InconsistentSize");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kInconsistentSize);
  }
  CHECK(b2.purge(seconds(100)) == 1);
}

TEST_CASE("fragment then reassemble in random orders with duplicates") {
  Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const auto total = static_cast<std::size_t>(rng.uniform_int(1, 2047));
    auto d = make_datagram(total);
    auto frames = fragment(d, mesh(), LinkLimits{}, static_cast<std::uint16_t>(trial));
    std::vector<std::size_t> order(frames.size());
    std::iota(order.begin(), order.end(), 0);
    const auto dups = static_cast<std::size_t>(rng.uniform_int(0, 3));
    for (std::size_t k = 0; k < dups; ++k) {
      order.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(frames.size()) - 1)));
    }
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    ReassemblyBuffer buf;
    int completes = 0;
    std::vector<bool> seen(frames.size(), false);
    for (std::size_t idx : order) {
      seen[idx] = true;
      auto r = buf.add(frames[idx], 0);
      const bool all = std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
      if (r.status == ReassemblyStatus::kComplete) {
        ++completes;
        REQUIRE(all);
        REQUIRE(r.datagram->compressed_total() == total);
        REQUIRE(r.payload_window == payload_window_of(*d, 16));
        if (frames.size() > 1) seen.assign(frames.size(), false);
      }
    }
    REQUIRE(completes >= 1);
  }
}

TEST_CASE("payload window is zero padded") {
  auto d = std::make_shared<Datagram>();
  d->app_payload_len = 40;
  d->body = {0xAB, 0xCD};
  auto w = payload_window_of(*d, 16);
  REQUIRE(w.size() == 16);
  CHECK(w[0] == 0xAB);
  CHECK(w[1] == 0xCD);
  CHECK(w[15] == 0);
  d->app_payload_len = 3;
  CHECK(payload_window_of(*d, 16).size() == 3);
}
