// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion. Exit status is 0
// when every criterion was evaluated; with --strict it is 1 if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "sd6lo/experiment.hpp"
#include "sd6lo/scenario.hpp"
#include "sd6lo/sim.hpp"

using namespace sd6lo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& label, bool ok, const std::string& detail) {
  std::printf("%s %-3s %-26s %s\n", ok ? "PASS" : "FAIL", (std::to_string(id) + ".").c_str(), label.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    h = fnv1a(fs::relative(f, dir).string(), h);
    h = fnv1a(o.str(), h);
  }
  return h;
}

// --- 1 ----------------------------------------------------------------------

void flow_oracle() {
  const auto t0 = Clock::now();
  Rng rng(1);
  int agree = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const Frame f = gen::lookup_frame(rng);
    const auto in_order = gen::lookup_entries(rng, f);
    FlowTable table(8);
    for (const auto& e : in_order) table.install(e, 0);
    const auto want = oracle::lookup(gen::installed_model(in_order), f);
    const auto got = table.lookup(f);
    agree += got.matched == want.matched && got.plan == want.plan &&
             got.hits.size() == want.hit_install_order.size();
  }
  const double secs = elapsed_s(t0);
  report(1, "flow-engine oracle", agree == trials && secs < 10.0,
         fmt("%d/%d lookups agree; %.2f s (limit 10 s)", agree, trials, secs));
}

// --- 2 ----------------------------------------------------------------------

void pipeline() {
  const CostModel zero{250'000, 0, 0, 0, 0};
  const SimTime t = airtime(127, zero.bitrate_bps);
  int exact = 0;
  for (std::size_t f = 1; f <= 6; ++f) {
    for (std::size_t h = 1; h <= 6; ++h) {
      const auto mesh = simulate_chain(StackMode::kSdn, f, h, t, zero);
      const auto ro = simulate_chain(StackMode::kRplBaseline, f, h, t, zero);
      exact += mesh.completion == static_cast<SimTime>(h + f - 1) * t &&
               ro.completion == static_cast<SimTime>(h * f) * t;
    }
  }
  report(2, "fragmentation pipeline", exact == 36,
         fmt("%d/36 (F,H) pairs exact: mesh-under (H+F-1)t, route-over HFt, t = %lld us", exact,
             static_cast<long long>(t)));
}

// --- 3-6 --------------------------------------------------------------------

struct PairRuns {
  ExperimentReport sdn;
  ExperimentReport rpl;
};

PairRuns run_both(const Scenario& s, unsigned jobs) {
  return {run_experiment(s, StackMode::kSdn, jobs), run_experiment(s, StackMode::kRplBaseline, jobs)};
}

const Aggregate& find_aggregate(const ExperimentReport& r, const std::string& metric) {
  for (const auto& a : r.summary)
    if (a.metric == metric) return a;
  throw std::runtime_error("no aggregate " + metric);
}

void reference_criteria(const Scenario& s, unsigned jobs) {
  const auto t0 = Clock::now();
  const ExperimentReport sdn = run_experiment(s, StackMode::kSdn, jobs);
  const double sdn_wall = elapsed_s(t0);
  const ExperimentReport rpl = run_experiment(s, StackMode::kRplBaseline, jobs);
  const std::size_t n = sdn.rows.size();

  std::size_t dao_free = 0;
  std::uint64_t dao_total = 0;
  for (const auto& r : sdn.rows) {
    dao_free += r.dao_datagrams == 0;
    dao_total += r.dao_datagrams;
  }
  report(3, "DAO-free SDN", dao_free == n,
         fmt("%zu/%zu SDN replicas with 0 DAO datagrams (total %llu)", dao_free, n,
             static_cast<unsigned long long>(dao_total)));

  std::size_t quiet = 0;
  std::uint64_t misses = 0;
  for (const auto& r : sdn.rows) {
    quiet += r.miss_requests == 0;
    misses += r.miss_requests;
  }
  report(4, "steady state", quiet == n && sdn_wall < 300.0,
         fmt("%zu/%zu replicas with 0 steady-window misses (total %llu); %zu replicas in %.2f s (limit 300 s)",
             quiet, n, static_cast<unsigned long long>(misses), n, sdn_wall));

  std::size_t sdn_higher = 0;
  for (std::size_t i = 0; i < n; ++i) sdn_higher += sdn.rows[i].control_bytes > rpl.rows[i].control_bytes;
  const auto& cs = find_aggregate(sdn, "control_bytes");
  const auto& cr = find_aggregate(rpl, "control_bytes");
  report(5, "overhead direction", sdn_higher >= 18,
         fmt("SDN > RPL control bytes in %zu/%zu pairs (need 18); mean SDN %.0f B, RPL %.0f B", sdn_higher, n,
             cs.mean.value_or(NAN), cr.mean.value_or(NAN)));

  const auto& rs = find_aggregate(sdn, "rtt_mean_us");
  const auto& rr = find_aggregate(rpl, "rtt_mean_us");
  const bool ok6 = rs.mean && rr.mean && rs.ci95_high && rr.ci95_low && *rs.mean < *rr.mean &&
                   *rs.ci95_high < *rr.ci95_low;
  report(6, "RTT direction", ok6,
         fmt("mean RTT SDN %.2f ms [%.2f, %.2f], RPL %.2f ms [%.2f, %.2f]", rs.mean.value_or(NAN) / 1e3,
             rs.ci95_low.value_or(NAN) / 1e3, rs.ci95_high.value_or(NAN) / 1e3, rr.mean.value_or(NAN) / 1e3,
             rr.ci95_low.value_or(NAN) / 1e3, rr.ci95_high.value_or(NAN) / 1e3));
}

// --- 7 ----------------------------------------------------------------------

/// Lexicographically least minimum-hop path over the unit-disk graph.
std::vector<std::uint16_t> geometric_oracle_path(const Scenario& s, std::uint16_t src, std::uint16_t dst) {
  std::vector<oracle::Edge> edges;
  for (const auto& a : s.nodes) {
    for (const auto& b : s.nodes) {
      if (a.id == b.id) continue;
      if (std::hypot(a.x_m - b.x_m, a.y_m - b.y_m) <= s.channel.tx_range_m) edges.push_back({a.id, b.id, 128});
    }
  }
  auto p = oracle::best_path(edges, src, dst);
  return p ? p->nodes : std::vector<std::uint16_t>{};
}

struct PairStats {
  std::vector<SimTime> rtts;
  std::vector<std::vector<ShortAddr>> paths;
  double mean_rtt = NAN;
  double mean_hops = NAN;
};

PairStats pair_stats(const Metrics& m, ShortAddr src, ShortAddr dst) {
  PairStats p;
  double sum = 0, hops = 0;
  for (const auto& r : m.rtt) {
    if (!r.steady || r.src != src || r.dst != dst) continue;
    p.rtts.push_back(r.rtt);
    p.paths.push_back(r.fwd_path);
    sum += static_cast<double>(r.rtt);
    hops += r.fwd_path.empty() ? 0.0 : static_cast<double>(r.fwd_path.size() - 1);
  }
  if (!p.rtts.empty()) {
    p.mean_rtt = sum / static_cast<double>(p.rtts.size());
    p.mean_hops = hops / static_cast<double>(p.rtts.size());
  }
  return p;
}

std::string path_str(const std::vector<std::uint16_t>& p) {
  std::string s;
  for (auto a : p) s += (s.empty() ? "" : "-") + std::to_string(a);
  return s;
}

void m2m_criteria(const Scenario& s, unsigned jobs) {
  // The scenario's single peer-to-peer sender.
  const NodeSpec* sender = nullptr;
  for (const auto& n : s.nodes)
    if (n.traffic_dst && *n.traffic_dst != kExternalServerAddr) sender = &n;
  if (!sender) {
    report(7, "M2M structure", false, "scenario has no peer-to-peer sender");
    return;
  }
  const ShortAddr src{sender->id};
  const ShortAddr dst = *sender->traffic_dst;
  const PairRuns runs = run_both(s, jobs);
  const std::size_t n = runs.sdn.replicas.size();
  const auto want = geometric_oracle_path(s, src.value, dst.value);

  std::vector<PairStats> sdn, rpl;
  for (std::size_t i = 0; i < n; ++i) {
    sdn.push_back(pair_stats(runs.sdn.replicas[i], src, dst));
    rpl.push_back(pair_stats(runs.rpl.replicas[i], src, dst));
  }

  std::size_t on_oracle = 0;
  for (const auto& p : sdn) {
    bool all = !p.paths.empty();
    for (const auto& path : p.paths) {
      std::vector<std::uint16_t> v;
      for (auto a : path) v.push_back(a.value);
      all = all && v == want;
    }
    on_oracle += all;
  }
  report(7, "M2M (a) SDN path", on_oracle == n,
         fmt("%zu/%zu replicas route every steady %u->%u packet on the oracle path %s", on_oracle, n, src.value,
             dst.value, path_str(want).c_str()));

  std::vector<double> means;
  for (const auto& p : sdn)
    if (!std::isnan(p.mean_rtt)) means.push_back(p.mean_rtt);
  const Aggregate a = aggregate("m2m_rtt", means);
  const double cv = a.mean && a.stddev ? *a.stddev / *a.mean : NAN;
  report(7, "M2M (b) SDN RTT stability", means.size() == n && cv < 0.05,
         fmt("coefficient of variation %.2f%% over %zu replica means (limit 5%%)", cv * 100, means.size()));

  std::size_t geq = 0, greater = 0;
  for (std::size_t i = 0; i < n; ++i) {
    geq += rpl[i].mean_hops >= sdn[i].mean_hops;
    greater += rpl[i].mean_hops > sdn[i].mean_hops;
  }
  report(7, "M2M (c) RPL hop count", geq == n && greater >= 10,
         fmt("RPL >= SDN hops in %zu/%zu replicas, > in %zu (need 10)", geq, n, greater));

  std::vector<SimTime> sdn_all, rpl_all;
  for (const auto& p : sdn) sdn_all.insert(sdn_all.end(), p.rtts.begin(), p.rtts.end());
  for (const auto& p : rpl) rpl_all.insert(rpl_all.end(), p.rtts.begin(), p.rtts.end());
  double frac = NAN;
  SimTime p90 = 0;
  if (!sdn_all.empty() && !rpl_all.empty()) {
    std::sort(sdn_all.begin(), sdn_all.end());
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(sdn_all.size())));
    p90 = sdn_all[rank - 1];
    const auto above = std::count_if(rpl_all.begin(), rpl_all.end(), [&](SimTime r) { return r > p90; });
    frac = static_cast<double>(above) / static_cast<double>(rpl_all.size());
  }
  report(7, "M2M (d) RPL tail", frac >= 0.5,
         fmt("%.1f%% of %zu RPL packets exceed the SDN 90th percentile %.2f ms (need 50%%)", frac * 100,
             rpl_all.size(), static_cast<double>(p90) / 1e3));
}

// --- 8 ----------------------------------------------------------------------

void sbi_reliability() {
  Rng rng(8);
  const double p = 0.3;
  const int trials = 10000;
  int ok = 0;
  for (int t = 0; t < trials; ++t) {
    gen::SbiLink l;
    l.server->resources().add("/x", Code::kPost, [](ShortAddr, const SbiMessage&) {
      return SbiResponse{Code::kChanged, {}};
    });
    for (int i = 0; i < 5; ++i) l.drop_requests.push_back(rng.bernoulli(p));
    l.client->request(ShortAddr{2}, Code::kPost, {"x"}, {}, [&](const auto& r) { ok += r.has_value(); });
    l.q.run();
  }
  const double rate = static_cast<double>(ok) / trials;
  const double expect = 1 - std::pow(p, 5);

  // Forced duplication: every request copy arrives three times.
  EventQueue q;
  std::optional<SbiEndpoint> client, server;
  int runs = 0;
  std::map<std::uint16_t, int> per_mid;
  client.emplace(q, [&](ShortAddr, const SbiMessage& m, MessageCategory) {
    for (int k = 0; k < 3; ++k) q.schedule_in(millis(10 + k), [&, m] { server->receive(ShortAddr{1}, m); });
  });
  server.emplace(q, [&](ShortAddr, const SbiMessage& m, MessageCategory) {
    q.schedule_in(millis(10), [&, m] { client->receive(ShortAddr{2}, m); });
  });
  server->resources().add("/x", Code::kPost, [&](ShortAddr, const SbiMessage& m) {
    ++runs;
    ++per_mid[m.message_id];
    return SbiResponse{Code::kChanged, {}};
  });
  const int requests = 500;
  int answered = 0;
  for (int i = 0; i < requests; ++i) {
    client->request(ShortAddr{2}, Code::kPost, {"x"}, {}, [&](const auto& r) { answered += r.has_value(); });
  }
  q.run();
  bool once = runs == requests;
  for (const auto& [mid, k] : per_mid) once = once && k == 1;

  report(8, "SBI reliability", std::abs(rate - expect) <= 0.02 && once && answered == requests,
         fmt("success %.4f vs 1-p^5 = %.4f (tolerance 0.02) over %d trials; %d handler runs for %d requests "
             "delivered 3x each",
             rate, expect, trials, runs, requests));
}

// --- 9 ----------------------------------------------------------------------

void encoding() {
  Rng rng(9);
  int ok = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    bool good = true;
    std::vector<FlowEntry> entries;
    const auto n = rng.uniform_int(0, 6);
    for (std::int64_t i = 0; i < n; ++i) entries.push_back(gen::codec_entry(rng));
    const auto fb = encode_flow_entries(entries);
    const auto back = decode_flow_entries(fb);
    good = good && encode_flow_entries(back) == fb && back.size() == entries.size();
    for (std::size_t i = 0; good && i < back.size(); ++i) {
      good = back[i].priority == entries[i].priority && back[i].rules == entries[i].rules &&
             back[i].actions == entries[i].actions && back[i].ttl_s == entries[i].ttl_s &&
             back[i].stats_counter == entries[i].stats_counter;
    }
    const TopologyReport rep = gen::topology_report(rng);
    const auto rb = encode_topology_report(rep);
    const auto rback = decode_topology_report(rb);
    good = good && rback == rep && encode_topology_report(rback) == rb;
    ok += good;
  }
  report(9, "encoding", ok == trials, fmt("%d/%d flow-entry sets and topology reports round-trip", ok, trials));
}

// --- 10 ---------------------------------------------------------------------

void determinism(const std::vector<Scenario>& scenarios, unsigned jobs) {
  const fs::path base = fs::temp_directory_path() / ("sd6lo_acceptance_" + std::to_string(::getpid()));
  int same = 0, total = 0;
  std::string detail;
  for (const Scenario& sc : scenarios) {
    Scenario s = sc;
    s.run.replicas = std::min(s.run.replicas, 3);
    for (StackMode mode : {StackMode::kSdn, StackMode::kRplBaseline}) {
      const fs::path a = base / "a", b = base / "b";
      fs::remove_all(base);
      write_report(run_experiment(s, mode, jobs), a);
      write_report(run_experiment(s, mode, 1), b);
      const auto ha = hash_dir(a), hb = hash_dir(b);
      ++total;
      same += ha == hb;
      detail += fmt(" %s/%s %016llx", s.name.c_str(), mode_name(mode), static_cast<unsigned long long>(ha));
      if (ha != hb) detail += "!=" + fmt("%016llx", static_cast<unsigned long long>(hb));
    }
  }
  fs::remove_all(base);
  report(10, "determinism", same == total, fmt("%d/%d reruns hash-identical;", same, total) + detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the sd6lo simulator"};
  std::string reference = SD6LO_SOURCE_DIR "/scenarios/reference26.scn";
  std::string m2m = SD6LO_SOURCE_DIR "/scenarios/m2m26.scn";
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  int m2m_replicas = 15;
  bool strict = false;
  app.add_option("--reference", reference, "Reference scenario")->check(CLI::ExistingFile);
  app.add_option("--m2m", m2m, "M2M scenario")->check(CLI::ExistingFile);
  app.add_option("--jobs", jobs, "Replicas run in parallel")->check(CLI::PositiveNumber);
  app.add_option("--m2m-replicas", m2m_replicas, "Replicas for the M2M criteria")->check(CLI::PositiveNumber);
  app.add_flag("--strict", strict, "Exit with status 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  try {
    const Scenario ref = load_scenario(reference);
    Scenario mm = load_scenario(m2m);
    mm.run.replicas = m2m_replicas;
    std::printf("acceptance: %s (%d replicas), %s (%d replicas)\n", ref.name.c_str(), ref.run.replicas,
                mm.name.c_str(), mm.run.replicas);
    flow_oracle();
    pipeline();
    reference_criteria(ref, jobs);
    m2m_criteria(mm, jobs);
    sbi_reliability();
    encoding();
    determinism({ref, mm}, jobs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
  std::printf("acceptance: %d failed\n", failures);
  return strict && failures > 0 ? 1 : 0;
}
