// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment orchestration: replicas of one scenario in one stack mode,
// CSV output, aggregation and side-by-side comparison of two runs.
//
// Output directory layout written by write_report():
//   meta.csv              key,value
//   replicas.csv          one row per replica (steady-window totals)
//   summary.csv           metric,n,mean,stddev,ci95_low,ci95_high
//   ecdf.csv              rtt_us,fraction over pooled steady RTT samples
//   scenario.scn          effective scenario after overrides
//   replica_NNN/control.csv, rtt.csv, diagnostics.csv, counters.csv

#ifndef SD6LO_EXPERIMENT_HPP
#define SD6LO_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sd6lo/scenario.hpp"
#include "sd6lo/sim.hpp"

namespace sd6lo {

struct RunOverrides {
  std::optional<int> replicas;
  std::optional<double> duration_s;
  std::optional<double> warmup_s;
  std::optional<std::uint64_t> base_seed;
  std::optional<std::uint32_t> update_period_s;
  std::optional<std::size_t> flow_table_capacity;
  std::optional<std::uint32_t> dao_period_s;
  std::optional<std::size_t> routing_capacity;
};

/// Applies overrides and re-validates. When only the duration shrinks below
/// the scenario's warm-up, the warm-up is scaled by the same factor and a
/// warning is appended to the scenario.
Scenario apply_overrides(Scenario s, const RunOverrides& o);

/// Steady-window totals of one replica.
struct ReplicaRow {
  int replica = 0;
  std::uint64_t seed = 0;
  std::uint64_t control_bytes = 0;
  std::uint64_t control_frames = 0;
  std::array<std::uint64_t, kMessageCategoryCount> category_bytes{};
  std::uint64_t miss_requests = 0;
  std::uint64_t dao_datagrams = 0;  // both windows
  std::uint64_t rtt_samples = 0;
  std::uint64_t rtt_sum_us = 0;

  std::optional<double> rtt_mean_us() const;
};

ReplicaRow replica_row(int replica, const Metrics& m);

struct Aggregate {
  std::string metric;
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> stddev;  // sample standard deviation
  std::optional<double> ci95_low;
  std::optional<double> ci95_high;
};

/// Mean, sample stddev and Student-t 95% interval, summed in input order.
Aggregate aggregate(std::string metric, const std::vector<double>& values);

struct EcdfPoint {
  std::int64_t rtt_us;
  double fraction;
};

/// One point per distinct value: fraction of samples <= value.
std::vector<EcdfPoint> ecdf(std::vector<std::int64_t> samples);

/// Aggregates in summary.csv order.
std::vector<Aggregate> summarize(const std::vector<ReplicaRow>& rows);

struct ExperimentReport {
  Scenario scenario;
  StackMode mode = StackMode::kSdn;
  std::vector<Metrics> replicas;
  std::vector<ReplicaRow> rows;
  std::vector<Aggregate> summary;
  std::vector<EcdfPoint> rtt_ecdf;
};

using ProgressFn = std::function<void(int replica, const Metrics&)>;

/// Runs replicas 0..R-1 with seed base_seed + index on up to `jobs` threads;
/// aggregation happens after all replicas finish. Throws Error on the first
/// failed replica (by index).
ExperimentReport run_experiment(const Scenario& s, StackMode mode, unsigned jobs = 1,
                                const ProgressFn& progress = {});

void write_report(const ExperimentReport& r, const std::filesystem::path& dir);

// CSV text of the individual files, as written by write_report().
std::string control_csv(const Metrics& m);
std::string rtt_csv(int replica, const Metrics& m);
std::string diagnostics_csv(const Metrics& m);
std::string counters_csv(const Metrics& m);
std::string replicas_csv(const std::vector<ReplicaRow>& rows);
std::string summary_csv(const std::vector<Aggregate>& a);
std::string ecdf_csv(const std::vector<EcdfPoint>& e);

/// Rebuilds replica rows from the replica_NNN/ files under `dir`.
std::vector<ReplicaRow> read_replica_rows(const std::filesystem::path& dir);
/// Pooled steady RTT samples from the replica_NNN/rtt.csv files.
std::vector<std::int64_t> read_steady_rtts(const std::filesystem::path& dir);

/// Merges two run directories into `out`: comparison.csv (metric rows side
/// by side), pairs.csv (replica-by-replica), ecdf.csv (both modes, tidy).
void compare_runs(const std::filesystem::path& a, const std::filesystem::path& b,
                  const std::filesystem::path& out);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace sd6lo

#endif  // SD6LO_EXPERIMENT_HPP
