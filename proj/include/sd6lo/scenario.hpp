// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Scenario files: INI-style sections of `key = value` pairs plus a node
// table. See scenarios/reference26.scn for a complete example.

#ifndef SD6LO_SCENARIO_HPP
#define SD6LO_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sd6lo/node.hpp"
#include "sd6lo/params.hpp"

namespace sd6lo {

struct NodeSpec {
  std::uint16_t id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  NodeRole role = NodeRole::kForwarder;
  std::optional<ShortAddr> traffic_dst;
  int line = 0;  // source line, for diagnostics
};

struct RunParams {
  double duration_s = 3600.0;
  double warmup_s = 900.0;
  int replicas = 20;
  std::uint64_t base_seed = 1;
};

struct Scenario {
  std::string name;
  std::vector<NodeSpec> nodes;
  UdgmParams channel;
  CostModel costs;
  SdnParams sdn;
  RplParams rpl;
  TrafficParams traffic;
  RunParams run;
  /// Non-fatal findings from loading (e.g. sections left at defaults).
  std::vector<std::string> warnings;

  const NodeSpec* border_router() const;
  const NodeSpec* find(std::uint16_t id) const;
};

/// Parses scenario text. Throws Error(kParseError) for malformed lines and
/// Error(kValidationError) for semantic problems; messages name the key and
/// line.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);
/// Throws Error(kValidationError) or Error(kConfigError).
void validate_scenario(const Scenario& s);
/// Canonical text form; parse_scenario(to_text(s)) reproduces s.
std::string to_text(const Scenario& s);

/// Stack parameters for one mode of a scenario.
StackParams stack_params(const Scenario& s, StackMode mode);

}  // namespace sd6lo

#endif  // SD6LO_SCENARIO_HPP
