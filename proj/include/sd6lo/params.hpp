// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SD6LO_PARAMS_HPP
#define SD6LO_PARAMS_HPP

#include <cstddef>
#include <cstdint>

#include "sd6lo/packet.hpp"
#include "sd6lo/sbi.hpp"

namespace sd6lo {

enum class StackMode : std::uint8_t { kSdn, kRplBaseline };
const char* mode_name(StackMode m);

struct UdgmParams {
  double tx_range_m = 12.0;
  double interference_range_m = 20.0;
  double p_tx_success = 1.0;
  double p_rx_success = 1.0;
};

struct CostModel {
  std::uint32_t bitrate_bps = 250'000;
  SimTime t_proc_mesh_us = 500;
  SimTime t_proc_routeover_base_us = 2'000;
  SimTime t_proc_routeover_per_frag_us = 1'000;
  SimTime t_ext_link_us = 5'000;  // one way
};

/// Forwarding delay at one intermediate hop for a datagram of F fragments.
/// Mesh-under pays per fragment as each one passes; route-over pays once
/// after reassembly.
inline SimTime hop_cost(StackMode mode, std::size_t fragments, const CostModel& c) {
  if (mode == StackMode::kSdn) return c.t_proc_mesh_us;
  return c.t_proc_routeover_base_us + c.t_proc_routeover_per_frag_us * static_cast<SimTime>(fragments);
}

inline SimTime airtime(std::size_t bytes, std::uint32_t bitrate_bps) {
  return static_cast<SimTime>(bytes) * 8 * kMicrosPerSecond / bitrate_bps;
}

struct MacParams {
  SimTime backoff_max_us = 2'400;
  int max_cca_redraws = 5;
  int max_attempts = 4;
  SimTime turnaround_us = 192;
  SimTime ack_timeout_us = 1'000;
  std::size_t ack_bytes = 11;
  std::size_t queue_cap = 32;
};

struct SdnParams {
  std::size_t flow_table_capacity = 40;
  std::uint32_t update_period_s = 1200;
  KeyFeatureSpec key_features = default_key_features();
  std::uint32_t default_ttl_s = 600;
  std::size_t miss_queue_cap = 4;
  /// The first topology report follows DODAG join after a uniform delay.
  double first_report_delay_max_s = 10.0;
  /// Minimum spacing between on-demand reports triggered by neighbor changes.
  double report_holddown_s = 30.0;
  double update_jitter = 0.10;
};

struct RplParams {
  std::size_t routing_capacity = 40;
  std::uint32_t dao_period_s = 60;
  double trickle_imin_s = 4.0;
  int trickle_doublings = 8;
  std::uint32_t hysteresis = 192;
  std::uint16_t dio_app_len = 66;
  std::uint16_t dao_app_len = 30;
};

struct TrafficParams {
  std::uint16_t payload_bytes = 40;
  double period_min_s = 30.0;
  double period_max_s = 90.0;
};

/// Everything a node stack needs besides its own identity.
struct StackParams {
  StackMode mode = StackMode::kSdn;
  LinkLimits limits;
  std::uint16_t compressed_header_len = 10;
  CostModel costs;
  MacParams mac;
  SdnParams sdn;
  RplParams rpl;
  TrafficParams traffic;
  RetxParams retx;
  SimTime reassembly_timeout = seconds(8);
};

}  // namespace sd6lo

#endif  // SD6LO_PARAMS_HPP
