/* Copyright 2026 The sd6lo Authors
 * SPDX-License-Identifier: Apache-2.0
 */

/* C interface to the sd6lo simulator library.
 *
 * Every function returns an sd6lo_status. On failure the calling thread's
 * last error message is available from sd6lo_last_error() until the next
 * call on that thread. Handles are opaque and owned by the caller; release
 * them with the matching *_free function. Free functions accept NULL.
 */

#ifndef SD6LO_SD6LO_H
#define SD6LO_SD6LO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SD6LO_API __declspec(dllexport)
#else
#define SD6LO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sd6lo_status {
  SD6LO_OK = 0,
  SD6LO_E_INVALID_ARGUMENT = 1,
  SD6LO_E_PARSE = 2,
  SD6LO_E_VALIDATION = 3,
  SD6LO_E_CONFIG = 4,
  SD6LO_E_IO = 5,
  SD6LO_E_OUT_OF_RANGE = 6,
  SD6LO_E_INTERNAL = 7
} sd6lo_status;

typedef enum sd6lo_mode { SD6LO_MODE_SDN = 0, SD6LO_MODE_RPL = 1 } sd6lo_mode;

typedef struct sd6lo_scenario sd6lo_scenario;
typedef struct sd6lo_experiment sd6lo_experiment;

/* Run overrides. Zero (or has_* == 0) keeps the scenario's value. */
typedef struct sd6lo_run_options {
  int32_t replicas;
  double duration_s;
  double warmup_s;
  int has_warmup; /* warm-up of 0 s is meaningful */
  uint64_t base_seed;
  int has_base_seed;
  uint32_t update_period_s;
  uint32_t flow_table_capacity;
  uint32_t dao_period_s;
  uint32_t routing_capacity;
  uint32_t jobs; /* worker threads; 0 means 1 */
} sd6lo_run_options;

/* Steady-window totals of one replica. */
typedef struct sd6lo_replica_stats {
  uint64_t seed;
  uint64_t control_bytes;
  uint64_t control_frames;
  uint64_t miss_requests;
  uint64_t dao_datagrams;
  uint64_t rtt_samples;
  double rtt_mean_us; /* NaN without samples */
} sd6lo_replica_stats;

typedef struct sd6lo_aggregate {
  size_t n;
  double mean; /* NaN when undefined */
  double stddev;
  double ci95_low;
  double ci95_high;
} sd6lo_aggregate;

SD6LO_API const char* sd6lo_version(void);
SD6LO_API const char* sd6lo_status_name(sd6lo_status s);
SD6LO_API const char* sd6lo_last_error(void);
SD6LO_API const char* sd6lo_mode_name(sd6lo_mode m);
SD6LO_API sd6lo_status sd6lo_mode_parse(const char* name, sd6lo_mode* out);

/* Scenarios */
SD6LO_API sd6lo_status sd6lo_scenario_load(const char* path, sd6lo_scenario** out);
SD6LO_API sd6lo_status sd6lo_scenario_parse(const char* text, sd6lo_scenario** out);
SD6LO_API void sd6lo_scenario_free(sd6lo_scenario* s);
SD6LO_API const char* sd6lo_scenario_name(const sd6lo_scenario* s);
SD6LO_API size_t sd6lo_scenario_node_count(const sd6lo_scenario* s);
SD6LO_API uint16_t sd6lo_scenario_border_router(const sd6lo_scenario* s);
SD6LO_API size_t sd6lo_scenario_warning_count(const sd6lo_scenario* s);
SD6LO_API const char* sd6lo_scenario_warning(const sd6lo_scenario* s, size_t i);
/* Canonical text; release with sd6lo_string_free. */
SD6LO_API sd6lo_status sd6lo_scenario_to_text(const sd6lo_scenario* s, char** out);
SD6LO_API void sd6lo_string_free(char* p);

/* Experiments */
SD6LO_API void sd6lo_run_options_init(sd6lo_run_options* o);
/* Runs all replicas. When out_dir is non-NULL the CSV report is written
 * there. `options` may be NULL. */
SD6LO_API sd6lo_status sd6lo_run(const sd6lo_scenario* s, sd6lo_mode mode, const sd6lo_run_options* options,
                                 const char* out_dir, sd6lo_experiment** out);
SD6LO_API void sd6lo_experiment_free(sd6lo_experiment* e);
/* Warnings raised while applying overrides. */
SD6LO_API size_t sd6lo_experiment_warning_count(const sd6lo_experiment* e);
SD6LO_API const char* sd6lo_experiment_warning(const sd6lo_experiment* e, size_t i);
SD6LO_API size_t sd6lo_experiment_replica_count(const sd6lo_experiment* e);
SD6LO_API sd6lo_status sd6lo_experiment_replica(const sd6lo_experiment* e, size_t i, sd6lo_replica_stats* out);
/* Metric names as in summary.csv, e.g. "control_bytes", "rtt_mean_us". */
SD6LO_API sd6lo_status sd6lo_experiment_aggregate(const sd6lo_experiment* e, const char* metric,
                                                  sd6lo_aggregate* out);

/* Merges two report directories written by sd6lo_run. */
SD6LO_API sd6lo_status sd6lo_compare(const char* dir_a, const char* dir_b, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* SD6LO_SD6LO_H */
