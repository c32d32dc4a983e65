// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Flow table: prioritized rule matching over frame bit windows and sequential
// action execution, with per-entry access counters and idle TTLs.

#ifndef SD6LO_FLOW_HPP
#define SD6LO_FLOW_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sd6lo/packet.hpp"

namespace sd6lo {

enum class Field : std::uint8_t {
  kMacSrc,
  kMacDst,
  kMeshOrig,
  kMeshFinal,
  kMeshHopsLeft,
  kFragTag,
  kPayload,
};
inline constexpr std::uint8_t kFieldCount = 7;

enum class Op : std::uint8_t { kEq, kNeq, kLe, kGe, kLt, kGt };
inline constexpr std::uint8_t kOpCount = 6;

enum class ActionType : std::uint8_t {
  kForward,
  kBroadcast,
  kModify,
  kDrop,
  kDecrement,
  kIncrement,
  kToUpperLayer,
  kContinue,
};
inline constexpr std::uint8_t kActionTypeCount = 8;

const char* field_name(Field f);
const char* op_name(Op o);
const char* action_name(ActionType t);

/// Bit width of a field. PAYLOAD spans the configured payload window.
std::size_t field_width(Field f, std::size_t payload_window_bytes = 16);

struct Rule {
  Field field = Field::kMeshFinal;
  std::uint16_t offset_bits = 0;
  std::uint8_t size_bits = 16;
  Op op = Op::kEq;
  std::uint64_t value = 0;

  bool operator==(const Rule&) const = default;
};

/// Operand layout follows the action type: FORWARD uses `value` as the
/// next-hop address; MODIFY uses field/value/offset/size; INCREMENT and
/// DECREMENT use field/value, with size_bits 0 meaning the whole field.
struct Action {
  ActionType type = ActionType::kDrop;
  Field field = Field::kMacSrc;
  std::uint64_t value = 0;
  std::uint16_t offset_bits = 0;
  std::uint8_t size_bits = 0;

  bool operator==(const Action&) const = default;

  static Action forward(ShortAddr next_hop) {
    return {ActionType::kForward, Field::kMacSrc, next_hop.value, 0, 0};
  }
  static Action decrement(Field f, std::uint64_t by) { return {ActionType::kDecrement, f, by, 0, 0}; }
  static Action increment(Field f, std::uint64_t by) { return {ActionType::kIncrement, f, by, 0, 0}; }
  static Action modify(Field f, std::uint16_t offset, std::uint8_t size, std::uint64_t v) {
    return {ActionType::kModify, f, v, offset, size};
  }
  static Action of(ActionType t) { return {t, Field::kMacSrc, 0, 0, 0}; }
};

struct FlowEntry {
  std::uint32_t priority = 0;
  std::vector<Rule> rules;
  std::vector<Action> actions;
  std::uint32_t stats_counter = 0;
  std::uint32_t ttl_s = 0;
  /// TTL restored on every matching access; set from ttl_s at install.
  std::uint32_t lifetime_s = 0;
  SimTime installed_at = 0;

  bool operator==(const FlowEntry&) const = default;
};

bool rule_valid(const Rule& r, std::size_t payload_window_bytes = 16);
bool action_valid(const Action& a, std::size_t payload_window_bytes = 16);
bool entry_valid(const FlowEntry& e, std::size_t payload_window_bytes = 16);

/// Reads a big-endian bit window of a frame field. Returns nullopt when the
/// field is absent from the frame or the window falls outside it.
std::optional<std::uint64_t> read_window(const Frame& f, Field field, std::size_t offset_bits,
                                         std::size_t size_bits);

/// Throwing variant: Error(kFieldAbsent) or Error(kWindowOutOfRange).
std::uint64_t extract_window(const Frame& f, Field field, std::size_t offset_bits,
                             std::size_t size_bits);

/// Writes `value` into a field bit window. Returns false if the field is absent.
bool write_window(Frame& f, Field field, std::size_t offset_bits, std::size_t size_bits,
                  std::uint64_t value);

bool compare(Op op, std::uint64_t lhs, std::uint64_t rhs);
bool entry_matches(const Frame& f, const FlowEntry& e);

struct MatchOutcome {
  bool matched = false;
  std::vector<Action> plan;
  /// Positions (in table order at lookup time) of the entries that matched.
  std::vector<std::size_t> hits;
};

enum class DispositionKind : std::uint8_t { kForward, kBroadcast, kToUpper, kDropped };

struct ActionResult {
  DispositionKind kind = DispositionKind::kDropped;
  ShortAddr next_hop;
  Frame frame;
  std::vector<std::string> diagnostics;
};

ActionResult apply_actions(Frame frame, std::span<const Action> plan);

enum class InstallResult { kInstalled, kReplaced, kRejected };

class FlowTable {
 public:
  explicit FlowTable(std::size_t capacity = 40) : capacity_(capacity) {}

  InstallResult install(FlowEntry e, SimTime now = 0);

  /// Scans in (priority, installed_at) order; the first match stops the scan
  /// unless its action list ends with CONTINUE. Matched entries have their
  /// counter incremented and their TTL restored.
  MatchOutcome lookup(const Frame& f);

  /// Ages every entry by dt_s; removes and returns the ones that hit zero.
  std::vector<FlowEntry> tick(std::uint32_t dt_s);

  void clear() {
    entries_.clear();
    seqs_.clear();
  }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::span<const FlowEntry> entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::uint64_t next_seq_ = 0;
  std::vector<FlowEntry> entries_;
  std::vector<std::uint64_t> seqs_;  // install order, parallel to entries_
};

}  // namespace sd6lo

#endif  // SD6LO_FLOW_HPP
