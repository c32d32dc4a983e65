// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// sd6lo command line: run experiments, compare reports, validate scenarios.
// Uses only the C interface.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sd6lo/sd6lo.h"

namespace {

int report_error(sd6lo_status st) {
  std::fprintf(stderr, "sd6lo: %s: %s\n", sd6lo_status_name(st), sd6lo_last_error());
  return 1;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct RunArgs {
  std::string scenario;
  std::string mode;
  std::optional<int> replicas;
  std::optional<double> duration;
  std::optional<double> warmup;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string out;
  std::optional<std::uint32_t> update_period;
  std::optional<std::uint32_t> table_capacity;
  std::optional<std::uint32_t> dao_period;
  std::optional<std::uint32_t> routing_capacity;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  sd6lo_mode mode;
  if (sd6lo_status st = sd6lo_mode_parse(a.mode.c_str(), &mode); st != SD6LO_OK) return report_error(st);
  sd6lo_scenario* sc = nullptr;
  if (sd6lo_status st = sd6lo_scenario_load(a.scenario.c_str(), &sc); st != SD6LO_OK) return report_error(st);
  for (size_t i = 0; i < sd6lo_scenario_warning_count(sc); ++i) {
    std::fprintf(stderr, "warning: %s\n", sd6lo_scenario_warning(sc, i));
  }

  sd6lo_run_options o;
  sd6lo_run_options_init(&o);
  if (a.replicas) o.replicas = *a.replicas;
  if (a.duration) o.duration_s = *a.duration;
  if (a.warmup) {
    o.warmup_s = *a.warmup;
    o.has_warmup = 1;
  }
  if (a.seed) {
    o.base_seed = *a.seed;
    o.has_base_seed = 1;
  }
  if (a.update_period) o.update_period_s = *a.update_period;
  if (a.table_capacity) o.flow_table_capacity = *a.table_capacity;
  if (a.dao_period) o.dao_period_s = *a.dao_period;
  if (a.routing_capacity) o.routing_capacity = *a.routing_capacity;
  o.jobs = a.jobs;

  sd6lo_experiment* ex = nullptr;
  sd6lo_status st = sd6lo_run(sc, mode, &o, a.out.empty() ? nullptr : a.out.c_str(), &ex);
  if (st != SD6LO_OK) {
    sd6lo_scenario_free(sc);
    return report_error(st);
  }
  for (size_t i = 0; i < sd6lo_experiment_warning_count(ex); ++i) {
    std::fprintf(stderr, "warning: %s\n", sd6lo_experiment_warning(ex, i));
  }

  if (!a.quiet) {
    std::printf("scenario %s, mode %s, %zu replicas\n", sd6lo_scenario_name(sc), sd6lo_mode_name(mode),
                sd6lo_experiment_replica_count(ex));
    std::printf("%-8s %-8s %14s %10s %8s %8s %12s\n", "replica", "seed", "ctrl_bytes", "ctrl_frm", "misses",
                "rtt_n", "rtt_mean_ms");
    for (size_t i = 0; i < sd6lo_experiment_replica_count(ex); ++i) {
      sd6lo_replica_stats r;
      sd6lo_experiment_replica(ex, i, &r);
      std::printf("%-8zu %-8llu %14llu %10llu %8llu %8llu %12s\n", i, static_cast<unsigned long long>(r.seed),
                  static_cast<unsigned long long>(r.control_bytes), static_cast<unsigned long long>(r.control_frames),
                  static_cast<unsigned long long>(r.miss_requests), static_cast<unsigned long long>(r.rtt_samples),
                  fmt(r.rtt_mean_us / 1000.0).c_str());
    }
    std::printf("\n%-16s %14s %14s %14s %14s\n", "metric", "mean", "stddev", "ci95_low", "ci95_high");
    for (const char* m : {"control_bytes", "control_frames", "miss_requests", "dao_datagrams", "rtt_mean_us"}) {
      sd6lo_aggregate g;
      if (sd6lo_experiment_aggregate(ex, m, &g) != SD6LO_OK) continue;
      std::printf("%-16s %14s %14s %14s %14s\n", m, fmt(g.mean).c_str(), fmt(g.stddev).c_str(),
                  fmt(g.ci95_low).c_str(), fmt(g.ci95_high).c_str());
    }
    if (!a.out.empty()) std::printf("\nwrote %s\n", a.out.c_str());
  }
  sd6lo_experiment_free(ex);
  sd6lo_scenario_free(sc);
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  if (sd6lo_status st = sd6lo_compare(a.c_str(), b.c_str(), out.c_str()); st != SD6LO_OK) return report_error(st);
  std::printf("wrote %s/comparison.csv, %s/pairs.csv, %s/ecdf.csv\n", out.c_str(), out.c_str(), out.c_str());
  return 0;
}

int cmd_validate(const std::string& path, bool print) {
  sd6lo_scenario* sc = nullptr;
  if (sd6lo_status st = sd6lo_scenario_load(path.c_str(), &sc); st != SD6LO_OK) return report_error(st);
  for (size_t i = 0; i < sd6lo_scenario_warning_count(sc); ++i) {
    std::fprintf(stderr, "warning: %s\n", sd6lo_scenario_warning(sc, i));
  }
  if (print) {
    char* text = nullptr;
    if (sd6lo_status st = sd6lo_scenario_to_text(sc, &text); st != SD6LO_OK) {
      sd6lo_scenario_free(sc);
      return report_error(st);
    }
    std::fputs(text, stdout);
    sd6lo_string_free(text);
  } else {
    std::printf("%s: ok (%zu nodes, border router %u)\n", sd6lo_scenario_name(sc), sd6lo_scenario_node_count(sc),
                static_cast<unsigned>(sd6lo_scenario_border_router(sc)));
  }
  sd6lo_scenario_free(sc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sd6lo: SDN over 6LoWPAN simulator"};
  app.set_version_flag("--version", std::string(sd6lo_version()));
  app.require_subcommand(1);

  RunArgs ra;
  CLI::App* run = app.add_subcommand("run", "Run replicas of a scenario in one stack mode");
  run->add_option("--scenario", ra.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", ra.mode, "Stack mode: sdn or rpl")->required()->check(CLI::IsMember({"sdn", "rpl"}));
  run->add_option("--replicas", ra.replicas, "Number of replicas (default: scenario value)")
      ->check(CLI::PositiveNumber);
  run->add_option("--duration", ra.duration, "Simulated seconds per replica")->check(CLI::PositiveNumber);
  run->add_option("--warmup", ra.warmup, "Seconds excluded from steady-state metrics")->check(CLI::NonNegativeNumber);
  run->add_option("--seed", ra.seed, "Base seed; replica i uses seed+i");
  run->add_option("--jobs", ra.jobs, "Replicas run in parallel")->check(CLI::PositiveNumber);
  run->add_option("--out", ra.out, "Directory for CSV output (omit to print only)");
  run->add_option("--update-period", ra.update_period, "SDN topology report period in seconds")
      ->check(CLI::PositiveNumber);
  run->add_option("--table-capacity", ra.table_capacity, "SDN flow table capacity")->check(CLI::PositiveNumber);
  run->add_option("--dao-period", ra.dao_period, "RPL DAO period in seconds")->check(CLI::PositiveNumber);
  run->add_option("--routing-capacity", ra.routing_capacity, "RPL downward routing table capacity")
      ->check(CLI::PositiveNumber);
  run->add_flag("--quiet", ra.quiet, "Suppress the result table");

  std::string ca, cb, cout_dir;
  CLI::App* cmp = app.add_subcommand("compare", "Merge two run directories side by side");
  cmp->add_option("A", ca, "First run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("B", cb, "Second run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--out", cout_dir, "Output directory")->required();

  std::string vpath;
  bool vprint = false;
  CLI::App* val = app.add_subcommand("validate", "Load and check a scenario file");
  val->add_option("--scenario", vpath, "Scenario file")->required();
  val->add_flag("--print", vprint, "Print the canonical scenario text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*run) return cmd_run(ra);
  if (*cmp) return cmd_compare(ca, cb, cout_dir);
  if (*val) return cmd_validate(vpath, vprint);
  return 2;
}
