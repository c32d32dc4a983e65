// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/sd6lo.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "sd6lo/experiment.hpp"
#include "sd6lo/scenario.hpp"

#ifndef SD6LO_VERSION
#define SD6LO_VERSION "0.0.0"
#endif

struct sd6lo_scenario {
  sd6lo::Scenario s;
};

struct sd6lo_experiment {
  sd6lo::ExperimentReport report;
  std::vector<std::string> warnings;
};

namespace {

thread_local std::string g_last_error;

sd6lo_status fail(sd6lo_status st, std::string msg) {
  g_last_error = std::move(msg);
  return st;
}

sd6lo_status from_errc(sd6lo::Errc c) {
  using sd6lo::Errc;
  switch (c) {
    case Errc::kParseError: return SD6LO_E_PARSE;
    case Errc::kValidationError: return SD6LO_E_VALIDATION;
    case Errc::kConfigError: return SD6LO_E_CONFIG;
    case Errc::kIoError: return SD6LO_E_IO;
    case Errc::kWindowOutOfRange: return SD6LO_E_OUT_OF_RANGE;
    default: return SD6LO_E_INTERNAL;
  }
}

/// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
sd6lo_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const sd6lo::Error& e) {
    return fail(from_errc(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SD6LO_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SD6LO_E_INTERNAL, e.what());
  } catch (...) {
    return fail(SD6LO_E_INTERNAL, "unknown error");
  }
}

sd6lo::StackMode to_mode(sd6lo_mode m) {
  return m == SD6LO_MODE_RPL ? sd6lo::StackMode::kRplBaseline : sd6lo::StackMode::kSdn;
}

double nan_if_empty(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

extern "C" {

const char* sd6lo_version(void) { return SD6LO_VERSION; }

const char* sd6lo_status_name(sd6lo_status s) {
  switch (s) {
    case SD6LO_OK: return "OK";
    case SD6LO_E_INVALID_ARGUMENT: return "InvalidArgument";
    case SD6LO_E_PARSE: return "ParseError";
    case SD6LO_E_VALIDATION: return "ValidationError";
    case SD6LO_E_CONFIG: return "ConfigError";
    case SD6LO_E_IO: return "IoError";
    case SD6LO_E_OUT_OF_RANGE: return "OutOfRange";
    case SD6LO_E_INTERNAL: return "InternalError";
  }
  return "Unknown";
}

const char* sd6lo_last_error(void) { return g_last_error.c_str(); }

const char* sd6lo_mode_name(sd6lo_mode m) { return sd6lo::mode_name(to_mode(m)); }

sd6lo_status sd6lo_mode_parse(const char* name, sd6lo_mode* out) {
  if (!name || !out) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  if (std::strcmp(name, "sdn") == 0) {
    *out = SD6LO_MODE_SDN;
  } else if (std::strcmp(name, "rpl") == 0) {
    *out = SD6LO_MODE_RPL;
  } else {
    return fail(SD6LO_E_INVALID_ARGUMENT, std::string("unknown mode '") + name + "' (expected sdn or rpl)");
  }
  return SD6LO_OK;
}

sd6lo_status sd6lo_scenario_load(const char* path, sd6lo_scenario** out) {
  if (!path || !out) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<sd6lo_scenario>();
    h->s = sd6lo::load_scenario(path);
    *out = h.release();
    return SD6LO_OK;
  });
}

sd6lo_status sd6lo_scenario_parse(const char* text, sd6lo_scenario** out) {
  if (!text || !out) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<sd6lo_scenario>();
    h->s = sd6lo::parse_scenario(text);
    *out = h.release();
    return SD6LO_OK;
  });
}

void sd6lo_scenario_free(sd6lo_scenario* s) { delete s; }

const char* sd6lo_scenario_name(const sd6lo_scenario* s) { return s ? s->s.name.c_str() : ""; }

size_t sd6lo_scenario_node_count(const sd6lo_scenario* s) { return s ? s->s.nodes.size() : 0; }

uint16_t sd6lo_scenario_border_router(const sd6lo_scenario* s) {
  if (!s) return 0;
  const sd6lo::NodeSpec* br = s->s.border_router();
  return br ? br->id : 0;
}

size_t sd6lo_scenario_warning_count(const sd6lo_scenario* s) { return s ? s->s.warnings.size() : 0; }

const char* sd6lo_scenario_warning(const sd6lo_scenario* s, size_t i) {
  if (!s || i >= s->s.warnings.size()) return nullptr;
  return s->s.warnings[i].c_str();
}

sd6lo_status sd6lo_scenario_to_text(const sd6lo_scenario* s, char** out) {
  if (!s || !out) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const std::string t = sd6lo::to_text(s->s);
    char* p = new char[t.size() + 1];
    std::memcpy(p, t.c_str(), t.size() + 1);
    *out = p;
    return SD6LO_OK;
  });
}

void sd6lo_string_free(char* p) { delete[] p; }

void sd6lo_run_options_init(sd6lo_run_options* o) {
  if (o) *o = sd6lo_run_options{};
}

sd6lo_status sd6lo_run(const sd6lo_scenario* s, sd6lo_mode mode, const sd6lo_run_options* options,
                       const char* out_dir, sd6lo_experiment** out) {
  if (!s || !out) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  if (mode != SD6LO_MODE_SDN && mode != SD6LO_MODE_RPL) return fail(SD6LO_E_INVALID_ARGUMENT, "bad mode");
  *out = nullptr;
  sd6lo_run_options o{};
  if (options) o = *options;
  if (o.replicas < 0) return fail(SD6LO_E_INVALID_ARGUMENT, "replicas must be positive");
  if (o.duration_s < 0 || std::isnan(o.duration_s)) return fail(SD6LO_E_INVALID_ARGUMENT, "duration must be positive");
  if (o.has_warmup && (o.warmup_s < 0 || std::isnan(o.warmup_s))) {
    return fail(SD6LO_E_INVALID_ARGUMENT, "warmup must not be negative");
  }
  return guarded([&] {
    sd6lo::RunOverrides ov;
    if (o.replicas > 0) ov.replicas = o.replicas;
    if (o.duration_s > 0) ov.duration_s = o.duration_s;
    if (o.has_warmup) ov.warmup_s = o.warmup_s;
    if (o.has_base_seed) ov.base_seed = o.base_seed;
    if (o.update_period_s > 0) ov.update_period_s = o.update_period_s;
    if (o.flow_table_capacity > 0) ov.flow_table_capacity = o.flow_table_capacity;
    if (o.dao_period_s > 0) ov.dao_period_s = o.dao_period_s;
    if (o.routing_capacity > 0) ov.routing_capacity = o.routing_capacity;
    const std::size_t before = s->s.warnings.size();
    sd6lo::Scenario eff = sd6lo::apply_overrides(s->s, ov);
    auto h = std::make_unique<sd6lo_experiment>();
    h->warnings.assign(eff.warnings.begin() + static_cast<std::ptrdiff_t>(before), eff.warnings.end());
    h->report = sd6lo::run_experiment(eff, to_mode(mode), o.jobs == 0 ? 1 : o.jobs);
    if (out_dir) sd6lo::write_report(h->report, out_dir);
    *out = h.release();
    return SD6LO_OK;
  });
}

void sd6lo_experiment_free(sd6lo_experiment* e) { delete e; }

size_t sd6lo_experiment_warning_count(const sd6lo_experiment* e) { return e ? e->warnings.size() : 0; }

const char* sd6lo_experiment_warning(const sd6lo_experiment* e, size_t i) {
  if (!e || i >= e->warnings.size()) return nullptr;
  return e->warnings[i].c_str();
}

size_t sd6lo_experiment_replica_count(const sd6lo_experiment* e) { return e ? e->report.rows.size() : 0; }

sd6lo_status sd6lo_experiment_replica(const sd6lo_experiment* e, size_t i, sd6lo_replica_stats* out) {
  if (!e || !out) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  if (i >= e->report.rows.size()) return fail(SD6LO_E_OUT_OF_RANGE, "replica index out of range");
  const sd6lo::ReplicaRow& r = e->report.rows[i];
  out->seed = r.seed;
  out->control_bytes = r.control_bytes;
  out->control_frames = r.control_frames;
  out->miss_requests = r.miss_requests;
  out->dao_datagrams = r.dao_datagrams;
  out->rtt_samples = r.rtt_samples;
  out->rtt_mean_us = nan_if_empty(r.rtt_mean_us());
  return SD6LO_OK;
}

sd6lo_status sd6lo_experiment_aggregate(const sd6lo_experiment* e, const char* metric, sd6lo_aggregate* out) {
  if (!e || !metric || !out) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  for (const sd6lo::Aggregate& a : e->report.summary) {
    if (a.metric != metric) continue;
    out->n = a.n;
    out->mean = nan_if_empty(a.mean);
    out->stddev = nan_if_empty(a.stddev);
    out->ci95_low = nan_if_empty(a.ci95_low);
    out->ci95_high = nan_if_empty(a.ci95_high);
    return SD6LO_OK;
  }
  return fail(SD6LO_E_INVALID_ARGUMENT, std::string("unknown metric '") + metric + "'");
}

sd6lo_status sd6lo_compare(const char* dir_a, const char* dir_b, const char* out_dir) {
  if (!dir_a || !dir_b || !out_dir) return fail(SD6LO_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    sd6lo::compare_runs(dir_a, dir_b, out_dir);
    return SD6LO_OK;
  });
}

}  // extern "C"
