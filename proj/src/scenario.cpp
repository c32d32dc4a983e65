// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sd6lo {

const char* mode_name(StackMode m) { return m == StackMode::kSdn ? "sdn" : "rpl"; }

const NodeSpec* Scenario::border_router() const {
  for (const auto& n : nodes)
    if (n.role == NodeRole::kBorderRouter) return &n;
  return nullptr;
}

const NodeSpec* Scenario::find(std::uint16_t id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void parse_fail(const std::string& src, int line, const std::string& msg) {
  throw Error(Errc::kParseError, src + ":" + std::to_string(line) + ": " + msg);
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, p) : "0";
}

std::optional<Field> parse_field(const std::string& s) {
  for (int i = 0; i < static_cast<int>(kFieldCount); ++i) {
    if (s == field_name(static_cast<Field>(i))) return static_cast<Field>(i);
  }
  return std::nullopt;
}

std::optional<NodeRole> parse_role(const std::string& s) {
  if (s == "border_router" || s == "br") return NodeRole::kBorderRouter;
  if (s == "sender") return NodeRole::kSender;
  if (s == "forwarder") return NodeRole::kForwarder;
  return std::nullopt;
}

// key -> setter; the setter returns false on a malformed value.
using Setter = std::function<bool(const std::string&)>;
using Section = std::map<std::string, Setter>;

template <typename T>
Setter num(T& target) {
  return [&target](const std::string& v) { return parse_number(v, target); };
}

Setter key_features(KeyFeatureSpec& target) {
  return [&target](const std::string& v) {
    KeyFeatureSpec spec;
    if (v != "none") {
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        const auto c1 = item.find(':');
        const auto c2 = item.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) return false;
        const auto f = parse_field(item.substr(0, c1));
        unsigned off = 0;
        unsigned size = 0;
        if (!f || !parse_number(item.substr(c1 + 1, c2 - c1 - 1), off) ||
            !parse_number(item.substr(c2 + 1), size))
          return false;
        if (size == 0 || size > 64 || off + size > field_width(*f)) return false;
        spec.push_back({*f, static_cast<std::uint16_t>(off), static_cast<std::uint8_t>(size)});
      }
    }
    target = std::move(spec);
    return true;
  };
}

std::map<std::string, Section> sections_for(Scenario& s) {
  std::map<std::string, Section> m;
  m["scenario"] = {{"name", [&s](const std::string& v) {
                      s.name = v;
                      return !v.empty();
                    }}};
  m["run"] = {{"duration_s", num(s.run.duration_s)},
              {"warmup_s", num(s.run.warmup_s)},
              {"replicas", num(s.run.replicas)},
              {"base_seed", num(s.run.base_seed)}};
  m["channel"] = {{"tx_range_m", num(s.channel.tx_range_m)},
                  {"interference_range_m", num(s.channel.interference_range_m)},
                  {"p_tx_success", num(s.channel.p_tx_success)},
                  {"p_rx_success", num(s.channel.p_rx_success)}};
  m["costs"] = {{"bitrate_bps", num(s.costs.bitrate_bps)},
                {"t_proc_mesh_us", num(s.costs.t_proc_mesh_us)},
                {"t_proc_routeover_base_us", num(s.costs.t_proc_routeover_base_us)},
                {"t_proc_routeover_per_frag_us", num(s.costs.t_proc_routeover_per_frag_us)},
                {"t_ext_link_ms", [&s](const std::string& v) {
                   double ms = 0;
                   if (!parse_number(v, ms)) return false;
                   s.costs.t_ext_link_us = static_cast<SimTime>(std::llround(ms * 1000.0));
                   return true;
                 }}};
  m["sdn"] = {{"flow_table_capacity", num(s.sdn.flow_table_capacity)},
              {"update_period_s", num(s.sdn.update_period_s)},
              {"default_ttl_s", num(s.sdn.default_ttl_s)},
              {"miss_queue_cap", num(s.sdn.miss_queue_cap)},
              {"key_features", key_features(s.sdn.key_features)}};
  m["rpl"] = {{"routing_capacity", num(s.rpl.routing_capacity)},
              {"dao_period_s", num(s.rpl.dao_period_s)},
              {"trickle_imin_s", num(s.rpl.trickle_imin_s)},
              {"trickle_doublings", num(s.rpl.trickle_doublings)},
              {"hysteresis", num(s.rpl.hysteresis)},
              {"dio_app_len", num(s.rpl.dio_app_len)},
              {"dao_app_len", num(s.rpl.dao_app_len)}};
  m["traffic"] = {{"payload_bytes", num(s.traffic.payload_bytes)},
                  {"period_min_s", num(s.traffic.period_min_s)},
                  {"period_max_s", num(s.traffic.period_max_s)}};
  return m;
}

NodeSpec parse_node_line(const std::string& line, const std::string& src, int lineno) {
  std::istringstream in(line);
  std::string id_s, x_s, y_s, role_s, dst_s, extra;
  if (!(in >> id_s >> x_s >> y_s >> role_s >> dst_s) || (in >> extra)) {
    parse_fail(src, lineno, "node line needs 5 columns: id x y role traffic");
  }
  NodeSpec n;
  n.line = lineno;
  unsigned id = 0;
  if (!parse_number(id_s, id) || id > 0xFFFF) parse_fail(src, lineno, "bad node id '" + id_s + "'");
  n.id = static_cast<std::uint16_t>(id);
  if (!parse_number(x_s, n.x_m) || !parse_number(y_s, n.y_m) || !std::isfinite(n.x_m) || !std::isfinite(n.y_m)) {
    parse_fail(src, lineno, "bad coordinates for node " + id_s);
  }
  const auto role = parse_role(role_s);
  if (!role) parse_fail(src, lineno, "unknown role '" + role_s + "' for node " + id_s);
  n.role = *role;
  if (dst_s == "server") {
    n.traffic_dst = kExternalServerAddr;
  } else if (dst_s != "-") {
    unsigned d = 0;
    if (!parse_number(dst_s, d) || d > 0xFFFF) parse_fail(src, lineno, "bad traffic destination '" + dst_s + "'");
    n.traffic_dst = ShortAddr{static_cast<std::uint16_t>(d)};
  }
  return n;
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(Errc::kValidationError, msg); }

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  Scenario s;
  auto table = sections_for(s);
  std::set<std::string> seen_sections;
  std::set<std::pair<std::string, std::string>> seen_keys;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(source, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "nodes" && !table.count(section)) parse_fail(source, lineno, "unknown section [" + section + "]");
      if (!seen_sections.insert(section).second) parse_fail(source, lineno, "section [" + section + "] repeated");
      continue;
    }
    if (section.empty()) parse_fail(source, lineno, "content before the first section");
    if (section == "nodes") {
      s.nodes.push_back(parse_node_line(line, source, lineno));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(source, lineno, "expected key = value in [" + section + "]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto& sec = table[section];
    auto it = sec.find(key);
    if (it == sec.end()) parse_fail(source, lineno, "unknown key '" + key + "' in [" + section + "]");
    if (!seen_keys.insert({section, key}).second) {
      parse_fail(source, lineno, "key '" + key + "' repeated in [" + section + "]");
    }
    if (!it->second(value)) parse_fail(source, lineno, "bad value '" + value + "' for key '" + key + "'");
  }
  for (const char* name : {"run", "channel", "costs", "sdn", "rpl", "traffic"}) {
    if (!seen_sections.count(name)) {
      s.warnings.push_back(std::string("section [") + name + "] missing; defaults applied");
    }
  }
  if (s.name.empty()) {
    const auto slash = source.find_last_of('/');
    std::string base = slash == std::string::npos ? source : source.substr(slash + 1);
    const auto dot = base.find_last_of('.');
    s.name = dot == std::string::npos ? base : base.substr(0, dot);
  }

  // Node-level checks carry line numbers, so run them before the rest.
  std::map<std::uint16_t, int> ids;
  for (const auto& n : s.nodes) {
    auto [it, fresh] = ids.emplace(n.id, n.line);
    if (!fresh) {
      invalid(source + ":" + std::to_string(n.line) + ": duplicate node id " + std::to_string(n.id) +
              " (first defined on line " + std::to_string(it->second) + ")");
    }
  }
  try {
    validate_scenario(s);
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::kIoError, "cannot open scenario file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str(), path);
}

void validate_scenario(const Scenario& s) {
  if (s.nodes.empty()) throw Error(Errc::kConfigError, "scenario has no nodes");
  std::size_t brs = 0;
  std::set<std::uint16_t> ids;
  for (const auto& n : s.nodes) {
    const std::string where = "node " + std::to_string(n.id) + (n.line ? " (line " + std::to_string(n.line) + ")" : "");
    if (!ids.insert(n.id).second) invalid("duplicate node id " + std::to_string(n.id));
    if (n.id > kMaxNodeAddr) invalid(where + ": id above " + std::to_string(kMaxNodeAddr) + " is reserved");
    if (n.role == NodeRole::kBorderRouter) ++brs;
    if (n.traffic_dst && *n.traffic_dst == ShortAddr{n.id}) invalid(where + ": traffic destination is itself");
  }
  if (brs == 0) throw Error(Errc::kConfigError, "scenario has no border_router");
  if (brs > 1) invalid("scenario has " + std::to_string(brs) + " border routers; exactly one is required");
  for (const auto& n : s.nodes) {
    if (n.traffic_dst && *n.traffic_dst != kExternalServerAddr && !ids.count(n.traffic_dst->value)) {
      invalid("node " + std::to_string(n.id) + ": traffic destination " + std::to_string(n.traffic_dst->value) +
              " is not a node");
    }
  }

  auto positive = [](bool ok, const char* key) {
    if (!ok) invalid(std::string("key '") + key + "' must be positive");
  };
  positive(s.run.duration_s > 0, "duration_s");
  positive(s.run.warmup_s >= 0 && s.run.warmup_s < s.run.duration_s, "warmup_s");
  positive(s.run.replicas > 0, "replicas");
  positive(s.channel.tx_range_m > 0, "tx_range_m");
  if (s.channel.interference_range_m < s.channel.tx_range_m) {
    invalid("key 'interference_range_m' must be at least tx_range_m");
  }
  for (auto [p, key] : {std::pair{s.channel.p_tx_success, "p_tx_success"}, {s.channel.p_rx_success, "p_rx_success"}}) {
    if (!(p >= 0.0 && p <= 1.0)) invalid(std::string("key '") + key + "' must be in [0, 1]");
  }
  positive(s.costs.bitrate_bps > 0, "bitrate_bps");
  positive(s.costs.t_proc_mesh_us >= 0, "t_proc_mesh_us");
  positive(s.costs.t_proc_routeover_base_us >= 0, "t_proc_routeover_base_us");
  positive(s.costs.t_proc_routeover_per_frag_us >= 0, "t_proc_routeover_per_frag_us");
  positive(s.costs.t_ext_link_us >= 0, "t_ext_link_ms");
  positive(s.sdn.flow_table_capacity > 0, "flow_table_capacity");
  positive(s.sdn.update_period_s > 0, "update_period_s");
  positive(s.sdn.default_ttl_s > 0, "default_ttl_s");
  positive(s.sdn.miss_queue_cap > 0, "miss_queue_cap");
  positive(s.rpl.routing_capacity > 0, "routing_capacity");
  positive(s.rpl.dao_period_s > 0, "dao_period_s");
  positive(s.rpl.trickle_imin_s > 0, "trickle_imin_s");
  if (s.rpl.trickle_doublings < 0 || s.rpl.trickle_doublings > 20) invalid("key 'trickle_doublings' must be in 0..20");
  positive(s.rpl.dio_app_len > 0, "dio_app_len");
  positive(s.rpl.dao_app_len > 0, "dao_app_len");
  if (s.traffic.payload_bytes < kAppBodySize) {
    invalid("key 'payload_bytes' must be at least " + std::to_string(kAppBodySize));
  }
  positive(s.traffic.period_min_s > 0, "period_min_s");
  if (s.traffic.period_max_s < s.traffic.period_min_s) invalid("key 'period_max_s' must be at least period_min_s");
}

std::string to_text(const Scenario& s) {
  std::ostringstream o;
  o << "[scenario]\nname = " << s.name << "\n\n";
  o << "[run]\nduration_s = " << fmt_double(s.run.duration_s) << "\nwarmup_s = " << fmt_double(s.run.warmup_s)
    << "\nreplicas = " << s.run.replicas << "\nbase_seed = " << s.run.base_seed << "\n\n";
  o << "[channel]\ntx_range_m = " << fmt_double(s.channel.tx_range_m)
    << "\ninterference_range_m = " << fmt_double(s.channel.interference_range_m)
    << "\np_tx_success = " << fmt_double(s.channel.p_tx_success)
    << "\np_rx_success = " << fmt_double(s.channel.p_rx_success) << "\n\n";
  o << "[costs]\nbitrate_bps = " << s.costs.bitrate_bps << "\nt_proc_mesh_us = " << s.costs.t_proc_mesh_us
    << "\nt_proc_routeover_base_us = " << s.costs.t_proc_routeover_base_us
    << "\nt_proc_routeover_per_frag_us = " << s.costs.t_proc_routeover_per_frag_us
    << "\nt_ext_link_ms = " << fmt_double(static_cast<double>(s.costs.t_ext_link_us) / 1000.0) << "\n\n";
  o << "[sdn]\nflow_table_capacity = " << s.sdn.flow_table_capacity
    << "\nupdate_period_s = " << s.sdn.update_period_s << "\ndefault_ttl_s = " << s.sdn.default_ttl_s
    << "\nmiss_queue_cap = " << s.sdn.miss_queue_cap << "\nkey_features = ";
  if (s.sdn.key_features.empty()) o << "none";
  for (std::size_t i = 0; i < s.sdn.key_features.size(); ++i) {
    const auto& k = s.sdn.key_features[i];
    o << (i ? "," : "") << field_name(k.field) << ':' << k.offset_bits << ':' << static_cast<int>(k.size_bits);
  }
  o << "\n\n";
  o << "[rpl]\nrouting_capacity = " << s.rpl.routing_capacity << "\ndao_period_s = " << s.rpl.dao_period_s
    << "\ntrickle_imin_s = " << fmt_double(s.rpl.trickle_imin_s)
    << "\ntrickle_doublings = " << s.rpl.trickle_doublings << "\nhysteresis = " << s.rpl.hysteresis
    << "\ndio_app_len = " << s.rpl.dio_app_len << "\ndao_app_len = " << s.rpl.dao_app_len << "\n\n";
  o << "[traffic]\npayload_bytes = " << s.traffic.payload_bytes
    << "\nperiod_min_s = " << fmt_double(s.traffic.period_min_s)
    << "\nperiod_max_s = " << fmt_double(s.traffic.period_max_s) << "\n\n";
  o << "[nodes]\n# id x y role traffic\n";
  for (const auto& n : s.nodes) {
    o << n.id << ' ' << fmt_double(n.x_m) << ' ' << fmt_double(n.y_m) << ' ' << role_name(n.role) << ' ';
    if (!n.traffic_dst) {
      o << '-';
    } else if (*n.traffic_dst == kExternalServerAddr) {
      o << "server";
    } else {
      o << n.traffic_dst->value;
    }
    o << '\n';
  }
  return o.str();
}

StackParams stack_params(const Scenario& s, StackMode mode) {
  StackParams p;
  p.mode = mode;
  p.costs = s.costs;
  p.sdn = s.sdn;
  p.rpl = s.rpl;
  p.traffic = s.traffic;
  return p;
}

}  // namespace sd6lo
