// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

namespace sd6lo {

namespace fs = std::filesystem;

namespace {

std::string node_id(ShortAddr a) { return a == kExternalServerAddr ? "server" : std::to_string(a.value); }

std::string path_text(const std::vector<ShortAddr>& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(p[i].value);
  }
  return out;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::kIoError, "cannot write " + p.string());
  f << text;
  if (!f) throw Error(Errc::kIoError, "write failed: " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::kIoError, "cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

using Row = std::vector<std::string>;

/// Header-keyed rows of a comma-separated file without quoting.
struct Csv {
  Row header;
  std::vector<Row> rows;

  std::size_t col(const std::string& name, const fs::path& p) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::kParseError, p.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

Row split(const std::string& line) {
  Row out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Csv read_csv(const fs::path& p) {
  std::istringstream in(read_file(p));
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r = split(line);
    if (first) {
      csv.header = std::move(r);
      first = false;
      continue;
    }
    if (r.size() != csv.header.size()) throw Error(Errc::kParseError, p.string() + ": ragged row");
    csv.rows.push_back(std::move(r));
  }
  if (first) throw Error(Errc::kParseError, p.string() + ": empty file");
  return csv;
}

template <typename T>
T parse_num(const std::string& s, const fs::path& p) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error(Errc::kParseError, p.string() + ": bad number '" + s + "'");
  }
  return v;
}

std::optional<double> parse_opt_double(const std::string& s, const fs::path& p) {
  if (s.empty()) return std::nullopt;
  return parse_num<double>(s, p);
}

std::string replica_dir_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replica_%03d", i);
  return buf;
}

std::vector<fs::path> replica_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw Error(Errc::kIoError, "not a directory: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (e.is_directory() && n.rfind("replica_", 0) == 0) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, std::string> read_key_values(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(read_file(p));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    kv[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return kv;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(Errc::kIoError, "cannot format double");
  return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// Overrides

Scenario apply_overrides(Scenario s, const RunOverrides& o) {
  if (o.replicas) s.run.replicas = *o.replicas;
  if (o.base_seed) s.run.base_seed = *o.base_seed;
  if (o.duration_s) {
    if (!o.warmup_s && s.run.warmup_s >= *o.duration_s) {
      const double scaled = s.run.warmup_s * (*o.duration_s / s.run.duration_s);
      s.warnings.push_back("warmup_s " + format_double(s.run.warmup_s) + " exceeds duration " +
                           format_double(*o.duration_s) + "; scaled to " + format_double(scaled));
      s.run.warmup_s = scaled;
    }
    s.run.duration_s = *o.duration_s;
  }
  if (o.warmup_s) s.run.warmup_s = *o.warmup_s;
  if (o.update_period_s) s.sdn.update_period_s = *o.update_period_s;
  if (o.flow_table_capacity) s.sdn.flow_table_capacity = *o.flow_table_capacity;
  if (o.dao_period_s) s.rpl.dao_period_s = *o.dao_period_s;
  if (o.routing_capacity) s.rpl.routing_capacity = *o.routing_capacity;
  validate_scenario(s);
  return s;
}

// ---------------------------------------------------------------------------
// Aggregation

std::optional<double> ReplicaRow::rtt_mean_us() const {
  if (rtt_samples == 0) return std::nullopt;
  return static_cast<double>(rtt_sum_us) / static_cast<double>(rtt_samples);
}

ReplicaRow replica_row(int replica, const Metrics& m) {
  ReplicaRow r;
  r.replica = replica;
  r.seed = m.seed;
  const CategoryCounters& c = m.steady();
  r.control_bytes = c.control_bytes();
  r.control_frames = c.control_frames();
  r.category_bytes = c.bytes;
  r.miss_requests = m.miss_requests[1];
  r.dao_datagrams = m.dao_datagrams();
  for (const RttSample& s : m.rtt) {
    if (!s.steady) continue;
    ++r.rtt_samples;
    r.rtt_sum_us += static_cast<std::uint64_t>(s.rtt);
  }
  return r;
}

Aggregate aggregate(std::string metric, const std::vector<double>& values) {
  Aggregate a;
  a.metric = std::move(metric);
  a.n = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(a.n);
  a.mean = mean;
  if (a.n < 2) return a;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(a.n - 1));
  a.stddev = sd;
  boost::math::students_t dist(static_cast<double>(a.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  const double half = t * sd / std::sqrt(static_cast<double>(a.n));
  a.ci95_low = mean - half;
  a.ci95_high = mean + half;
  return a;
}

std::vector<EcdfPoint> ecdf(std::vector<std::int64_t> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<EcdfPoint> out;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    out.push_back({samples[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

std::vector<Aggregate> summarize(const std::vector<ReplicaRow>& rows) {
  std::vector<Aggregate> out;
  auto column = [&](auto get) {
    std::vector<double> v;
    for (const ReplicaRow& r : rows) v.push_back(static_cast<double>(get(r)));
    return v;
  };
  out.push_back(aggregate("control_bytes", column([](const ReplicaRow& r) { return r.control_bytes; })));
  out.push_back(aggregate("control_frames", column([](const ReplicaRow& r) { return r.control_frames; })));
  for (std::size_t c = 0; c < kMessageCategoryCount; ++c) {
    out.push_back(aggregate(std::string("bytes_") + category_name(static_cast<MessageCategory>(c)),
                            column([c](const ReplicaRow& r) { return r.category_bytes[c]; })));
  }
  out.push_back(aggregate("miss_requests", column([](const ReplicaRow& r) { return r.miss_requests; })));
  out.push_back(aggregate("dao_datagrams", column([](const ReplicaRow& r) { return r.dao_datagrams; })));
  out.push_back(aggregate("rtt_samples", column([](const ReplicaRow& r) { return r.rtt_samples; })));
  std::vector<double> rtt;
  for (const ReplicaRow& r : rows) {
    if (auto m = r.rtt_mean_us()) rtt.push_back(*m);
  }
  out.push_back(aggregate("rtt_mean_us", rtt));
  return out;
}

// ---------------------------------------------------------------------------
// Running

ExperimentReport run_experiment(const Scenario& s, StackMode mode, unsigned jobs, const ProgressFn& progress) {
  validate_scenario(s);
  if (s.run.replicas < 1) throw Error(Errc::kConfigError, "replicas must be at least 1");
  const auto n = static_cast<std::size_t>(s.run.replicas);
  ExperimentReport rep;
  rep.scenario = s;
  rep.mode = mode;
  rep.replicas.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::mutex progress_mu;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        rep.replicas[i] = run_replica(s, mode, s.run.base_seed + i);
        if (progress) {
          std::lock_guard<std::mutex> lock(progress_mu);
          progress(static_cast<int>(i), rep.replicas[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "replica " + std::to_string(i) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::kConfigError, "replica " + std::to_string(i) + ": " + e.what());
    }
  }

  std::vector<std::int64_t> pooled;
  for (std::size_t i = 0; i < n; ++i) {
    rep.rows.push_back(replica_row(static_cast<int>(i), rep.replicas[i]));
    for (const RttSample& r : rep.replicas[i].rtt) {
      if (r.steady) pooled.push_back(r.rtt);
    }
  }
  rep.summary = summarize(rep.rows);
  rep.rtt_ecdf = ecdf(std::move(pooled));
  return rep;
}

// ---------------------------------------------------------------------------
// Writing

std::string control_csv(const Metrics& m) {
  std::string o = "window,category,frames,bytes\n";
  for (int w = 0; w < 2; ++w) {
    for (std::size_t c = 0; c < kMessageCategoryCount; ++c) {
      o += w == 0 ? "warmup," : "steady,";
      o += category_name(static_cast<MessageCategory>(c));
      o += ',' + std::to_string(m.by_window[w].frames[c]) + ',' + std::to_string(m.by_window[w].bytes[c]) + '\n';
    }
  }
  return o;
}

std::string rtt_csv(int replica, const Metrics& m) {
  std::string o = "replica,send_time_us,rtt_us,src,dst,window,fwd_hops,rev_hops,fwd_path,rev_path\n";
  for (const RttSample& s : m.rtt) {
    o += std::to_string(replica) + ',' + std::to_string(s.send_time) + ',' + std::to_string(s.rtt) + ',' +
         node_id(s.src) + ',' + node_id(s.dst) + ',' + (s.steady ? "steady," : "warmup,");
    o += (s.fwd_path.empty() ? std::string() : std::to_string(s.fwd_path.size() - 1)) + ',';
    o += (s.rev_path.empty() ? std::string() : std::to_string(s.rev_path.size() - 1)) + ',';
    o += path_text(s.fwd_path) + ',' + path_text(s.rev_path) + '\n';
  }
  return o;
}

std::string diagnostics_csv(const Metrics& m) {
  std::string o = "cause,count\n";
  for (const auto& [k, v] : m.diagnostics) o += k + ',' + std::to_string(v) + '\n';
  return o;
}

std::string counters_csv(const Metrics& m) {
  static const char* kKinds[] = {"udp_data", "sbi", "rpl_dio", "rpl_dao"};
  std::string o = "counter,value\n";
  auto add = [&o](const std::string& k, std::uint64_t v) { o += k + ',' + std::to_string(v) + '\n'; };
  add("seed", m.seed);
  add("warmup_us", static_cast<std::uint64_t>(m.warmup));
  add("duration_us", static_cast<std::uint64_t>(m.duration));
  add("events", m.events);
  add("frames_transmitted", m.frames_transmitted);
  add("on_air_bytes", m.on_air_bytes);
  add("mac_acks", m.mac_acks);
  add("rx_attempts", m.rx_attempts);
  add("rx_delivered", m.rx_delivered);
  add("rx_lost", m.rx_lost);
  add("rx_collided", m.rx_collided);
  add("miss_requests_warmup", m.miss_requests[0]);
  add("miss_requests_steady", m.miss_requests[1]);
  for (int w = 0; w < 2; ++w) {
    for (int k = 0; k < 4; ++k) {
      add(std::string("datagrams_") + kKinds[k] + (w == 0 ? "_warmup" : "_steady"), m.datagrams_created[w][k]);
    }
  }
  return o;
}

std::string replicas_csv(const std::vector<ReplicaRow>& rows) {
  std::string o = "replica,seed,control_bytes,control_frames,miss_requests,dao_datagrams,rtt_samples,rtt_sum_us,rtt_mean_us";
  for (std::size_t c = 0; c < kMessageCategoryCount; ++c) {
    o += std::string(",bytes_") + category_name(static_cast<MessageCategory>(c));
  }
  o += '\n';
  for (const ReplicaRow& r : rows) {
    o += std::to_string(r.replica) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.control_bytes) + ',' +
         std::to_string(r.control_frames) + ',' + std::to_string(r.miss_requests) + ',' +
         std::to_string(r.dao_datagrams) + ',' + std::to_string(r.rtt_samples) + ',' +
         std::to_string(r.rtt_sum_us) + ',' + opt_double(r.rtt_mean_us());
    for (auto b : r.category_bytes) o += ',' + std::to_string(b);
    o += '\n';
  }
  return o;
}

std::string summary_csv(const std::vector<Aggregate>& a) {
  std::string o = "metric,n,mean,stddev,ci95_low,ci95_high\n";
  for (const Aggregate& x : a) {
    o += x.metric + ',' + std::to_string(x.n) + ',' + opt_double(x.mean) + ',' + opt_double(x.stddev) + ',' +
         opt_double(x.ci95_low) + ',' + opt_double(x.ci95_high) + '\n';
  }
  return o;
}

std::string ecdf_csv(const std::vector<EcdfPoint>& e) {
  std::string o = "rtt_us,fraction\n";
  for (const EcdfPoint& p : e) o += std::to_string(p.rtt_us) + ',' + format_double(p.fraction) + '\n';
  return o;
}

void write_report(const ExperimentReport& r, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  std::string meta = "key,value\n";
  meta += "scenario," + r.scenario.name + '\n';
  meta += std::string("mode,") + mode_name(r.mode) + '\n';
  meta += "replicas," + std::to_string(r.rows.size()) + '\n';
  meta += "base_seed," + std::to_string(r.scenario.run.base_seed) + '\n';
  meta += "duration_s," + format_double(r.scenario.run.duration_s) + '\n';
  meta += "warmup_s," + format_double(r.scenario.run.warmup_s) + '\n';
  write_file(dir / "meta.csv", meta);
  write_file(dir / "scenario.scn", to_text(r.scenario));
  write_file(dir / "replicas.csv", replicas_csv(r.rows));
  write_file(dir / "summary.csv", summary_csv(r.summary));
  write_file(dir / "ecdf.csv", ecdf_csv(r.rtt_ecdf));
  for (std::size_t i = 0; i < r.replicas.size(); ++i) {
    const fs::path sub = dir / replica_dir_name(static_cast<int>(i));
    fs::create_directories(sub, ec);
    if (ec) throw Error(Errc::kIoError, "cannot create " + sub.string() + ": " + ec.message());
    const Metrics& m = r.replicas[i];
    write_file(sub / "control.csv", control_csv(m));
    write_file(sub / "rtt.csv", rtt_csv(static_cast<int>(i), m));
    write_file(sub / "diagnostics.csv", diagnostics_csv(m));
    write_file(sub / "counters.csv", counters_csv(m));
  }
}

// ---------------------------------------------------------------------------
// Reading back

std::vector<ReplicaRow> read_replica_rows(const fs::path& dir) {
  std::vector<ReplicaRow> rows;
  for (const fs::path& sub : replica_dirs(dir)) {
    ReplicaRow r;
    r.replica = parse_num<int>(sub.filename().string().substr(8), sub);

    const fs::path cpath = sub / "control.csv";
    const Csv control = read_csv(cpath);
    const std::size_t cw = control.col("window", cpath), cc = control.col("category", cpath),
                      cf = control.col("frames", cpath), cb = control.col("bytes", cpath);
    for (const Row& row : control.rows) {
      if (row[cw] != "steady") continue;
      for (std::size_t c = 0; c < kMessageCategoryCount; ++c) {
        const auto cat = static_cast<MessageCategory>(c);
        if (row[cc] != category_name(cat)) continue;
        const auto bytes = parse_num<std::uint64_t>(row[cb], cpath);
        r.category_bytes[c] = bytes;
        if (cat != MessageCategory::kData) {
          r.control_bytes += bytes;
          r.control_frames += parse_num<std::uint64_t>(row[cf], cpath);
        }
      }
    }

    const fs::path kpath = sub / "counters.csv";
    const auto counters = read_key_values(kpath);
    auto counter = [&](const std::string& k) -> std::uint64_t {
      auto it = counters.find(k);
      if (it == counters.end()) throw Error(Errc::kParseError, kpath.string() + ": missing " + k);
      return parse_num<std::uint64_t>(it->second, kpath);
    };
    r.seed = counter("seed");
    r.miss_requests = counter("miss_requests_steady");
    r.dao_datagrams = counter("datagrams_rpl_dao_warmup") + counter("datagrams_rpl_dao_steady");

    const fs::path rpath = sub / "rtt.csv";
    const Csv rtt = read_csv(rpath);
    const std::size_t rw = rtt.col("window", rpath), rr = rtt.col("rtt_us", rpath);
    for (const Row& row : rtt.rows) {
      if (row[rw] != "steady") continue;
      ++r.rtt_samples;
      r.rtt_sum_us += parse_num<std::uint64_t>(row[rr], rpath);
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::int64_t> read_steady_rtts(const fs::path& dir) {
  std::vector<std::int64_t> out;
  for (const fs::path& sub : replica_dirs(dir)) {
    const fs::path rpath = sub / "rtt.csv";
    const Csv rtt = read_csv(rpath);
    const std::size_t rw = rtt.col("window", rpath), rr = rtt.col("rtt_us", rpath);
    for (const Row& row : rtt.rows) {
      if (row[rw] == "steady") out.push_back(parse_num<std::int64_t>(row[rr], rpath));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

struct RunDir {
  std::string label;
  std::map<std::string, std::string> meta;
  Csv summary;
  Csv replicas;
  Csv ecdf;
};

RunDir load_run(const fs::path& dir) {
  RunDir r;
  r.meta = read_key_values(dir / "meta.csv");
  r.summary = read_csv(dir / "summary.csv");
  r.replicas = read_csv(dir / "replicas.csv");
  r.ecdf = read_csv(dir / "ecdf.csv");
  r.label = r.meta.count("mode") ? r.meta["mode"] : dir.filename().string();
  return r;
}

}  // namespace

void compare_runs(const fs::path& a_dir, const fs::path& b_dir, const fs::path& out) {
  RunDir a = load_run(a_dir);
  RunDir b = load_run(b_dir);
  if (a.label == b.label) {
    a.label += "_a";
    b.label += "_b";
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::kIoError, "cannot create " + out.string() + ": " + ec.message());

  // comparison.csv
  const fs::path as = a_dir / "summary.csv", bs = b_dir / "summary.csv";
  std::map<std::string, const Row*> b_rows;
  for (const Row& r : b.summary.rows) b_rows[r[b.summary.col("metric", bs)]] = &r;
  std::string o = "metric";
  for (const std::string& l : {a.label, b.label}) {
    for (const char* f : {"_n", "_mean", "_stddev", "_ci95_low", "_ci95_high"}) o += ',' + l + f;
  }
  o += ",difference,ratio,ci_overlap\n";
  static const char* kFields[] = {"n", "mean", "stddev", "ci95_low", "ci95_high"};
  for (const Row& ra : a.summary.rows) {
    const std::string metric = ra[a.summary.col("metric", as)];
    auto it = b_rows.find(metric);
    if (it == b_rows.end()) continue;
    const Row& rb = *it->second;
    o += metric;
    for (const char* f : kFields) o += ',' + ra[a.summary.col(f, as)];
    for (const char* f : kFields) o += ',' + rb[b.summary.col(f, bs)];
    const auto ma = parse_opt_double(ra[a.summary.col("mean", as)], as);
    const auto mb = parse_opt_double(rb[b.summary.col("mean", bs)], bs);
    o += ',' + (ma && mb ? format_double(*ma - *mb) : std::string());
    o += ',' + (ma && mb && *mb != 0.0 ? format_double(*ma / *mb) : std::string());
    const auto la = parse_opt_double(ra[a.summary.col("ci95_low", as)], as);
    const auto ha = parse_opt_double(ra[a.summary.col("ci95_high", as)], as);
    const auto lb = parse_opt_double(rb[b.summary.col("ci95_low", bs)], bs);
    const auto hb = parse_opt_double(rb[b.summary.col("ci95_high", bs)], bs);
    if (la && ha && lb && hb) {
      o += (*la <= *hb && *lb <= *ha) ? ",1" : ",0";
    } else {
      o += ',';
    }
    o += '\n';
  }
  write_file(out / "comparison.csv", o);

  // pairs.csv, joined on replica index
  const fs::path ar = a_dir / "replicas.csv", br = b_dir / "replicas.csv";
  std::map<std::string, const Row*> b_rep;
  for (const Row& r : b.replicas.rows) b_rep[r[b.replicas.col("replica", br)]] = &r;
  std::string p = "replica," + a.label + "_seed," + b.label + "_seed," + a.label + "_control_bytes," + b.label +
                  "_control_bytes," + a.label + "_rtt_mean_us," + b.label + "_rtt_mean_us,control_bytes_a_gt_b\n";
  for (const Row& ra : a.replicas.rows) {
    const std::string idx = ra[a.replicas.col("replica", ar)];
    auto it = b_rep.find(idx);
    if (it == b_rep.end()) continue;
    const Row& rb = *it->second;
    const std::string cba = ra[a.replicas.col("control_bytes", ar)];
    const std::string cbb = rb[b.replicas.col("control_bytes", br)];
    p += idx + ',' + ra[a.replicas.col("seed", ar)] + ',' + rb[b.replicas.col("seed", br)] + ',' + cba + ',' + cbb +
         ',' + ra[a.replicas.col("rtt_mean_us", ar)] + ',' + rb[b.replicas.col("rtt_mean_us", br)] + ',' +
         (parse_num<std::uint64_t>(cba, ar) > parse_num<std::uint64_t>(cbb, br) ? "1" : "0") + '\n';
  }
  write_file(out / "pairs.csv", p);

  // ecdf.csv, tidy
  std::string e = "mode,rtt_us,fraction\n";
  for (const RunDir* r : {&a, &b}) {
    const fs::path ep = (r == &a ? a_dir : b_dir) / "ecdf.csv";
    const std::size_t cr = r->ecdf.col("rtt_us", ep), cf = r->ecdf.col("fraction", ep);
    for (const Row& row : r->ecdf.rows) e += r->label + ',' + row[cr] + ',' + row[cf] + '\n';
  }
  write_file(out / "ecdf.csv", e);
}

}  // namespace sd6lo
