// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/flow.hpp"

#include <algorithm>
#include <tuple>

namespace sd6lo {
namespace {

std::uint64_t mask_of(std::size_t bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

/// Current width of a field in this frame, or nullopt if absent.
std::optional<std::size_t> present_width(const Frame& f, Field field) {
  switch (field) {
    case Field::kMacSrc:
    case Field::kMacDst:
      return 16;
    case Field::kMeshOrig:
    case Field::kMeshFinal:
      return f.mesh ? std::optional<std::size_t>(16) : std::nullopt;
    case Field::kMeshHopsLeft:
      return f.mesh ? std::optional<std::size_t>(4) : std::nullopt;
    case Field::kFragTag:
      return f.frag ? std::optional<std::size_t>(16) : std::nullopt;
    case Field::kPayload:
      return f.payload_window.size() * 8;
  }
  return std::nullopt;
}

std::uint64_t scalar_value(const Frame& f, Field field) {
  switch (field) {
    case Field::kMacSrc: return f.mac_src.value;
    case Field::kMacDst: return f.mac_dst.value;
    case Field::kMeshOrig: return f.mesh->originator.value;
    case Field::kMeshFinal: return f.mesh->final_addr.value;
    case Field::kMeshHopsLeft: return f.mesh->hops_left & 0x0F;
    case Field::kFragTag: return f.frag->tag;
    case Field::kPayload: break;
  }
  return 0;
}

void set_scalar(Frame& f, Field field, std::uint64_t v) {
  switch (field) {
    case Field::kMacSrc: f.mac_src.value = static_cast<std::uint16_t>(v); break;
    case Field::kMacDst: f.mac_dst.value = static_cast<std::uint16_t>(v); break;
    case Field::kMeshOrig: f.mesh->originator.value = static_cast<std::uint16_t>(v); break;
    case Field::kMeshFinal: f.mesh->final_addr.value = static_cast<std::uint16_t>(v); break;
    case Field::kMeshHopsLeft: f.mesh->hops_left = static_cast<std::uint8_t>(v & 0x0F); break;
    case Field::kFragTag: f.frag->tag = static_cast<std::uint16_t>(v); break;
    case Field::kPayload: break;
  }
}

bool window_fits(std::size_t offset, std::size_t size, std::size_t width) {
  return size >= 1 && size <= 64 && offset + size <= width;
}

}  // namespace

const char* field_name(Field f) {
  switch (f) {
    case Field::kMacSrc: return "MAC_SRC";
    case Field::kMacDst: return "MAC_DST";
    case Field::kMeshOrig: return "MESH_ORIG";
    case Field::kMeshFinal: return "MESH_FINAL";
    case Field::kMeshHopsLeft: return "MESH_HOPS_LEFT";
    case Field::kFragTag: return "FRAG_TAG";
    case Field::kPayload: return "PAYLOAD";
  }
  return "?";
}

const char* op_name(Op o) {
  switch (o) {
    case Op::kEq: return "EQ";
    case Op::kNeq: return "NEQ";
    case Op::kLe: return "LE";
    case Op::kGe: return "GE";
    case Op::kLt: return "LT";
    case Op::kGt: return "GT";
  }
  return "?";
}

const char* action_name(ActionType t) {
  switch (t) {
    case ActionType::kForward: return "FORWARD";
    case ActionType::kBroadcast: return "BROADCAST";
    case ActionType::kModify: return "MODIFY";
    case ActionType::kDrop: return "DROP";
    case ActionType::kDecrement: return "DECREMENT";
    case ActionType::kIncrement: return "INCREMENT";
    case ActionType::kToUpperLayer: return "TO_UPPER_LAYER";
    case ActionType::kContinue: return "CONTINUE";
  }
  return "?";
}

std::size_t field_width(Field f, std::size_t payload_window_bytes) {
  switch (f) {
    case Field::kMeshHopsLeft: return 4;
    case Field::kPayload: return 8 * payload_window_bytes;
    default: return 16;
  }
}

bool rule_valid(const Rule& r, std::size_t w) {
  if (static_cast<std::uint8_t>(r.field) >= kFieldCount) return false;
  if (static_cast<std::uint8_t>(r.op) >= kOpCount) return false;
  if (!window_fits(r.offset_bits, r.size_bits, field_width(r.field, w))) return false;
  return r.value <= mask_of(r.size_bits);
}

bool action_valid(const Action& a, std::size_t w) {
  if (static_cast<std::uint8_t>(a.type) >= kActionTypeCount) return false;
  if (static_cast<std::uint8_t>(a.field) >= kFieldCount) return false;
  switch (a.type) {
    case ActionType::kForward:
      return a.value <= 0xFFFF;
    case ActionType::kModify:
      return window_fits(a.offset_bits, a.size_bits, field_width(a.field, w)) &&
             a.value <= mask_of(a.size_bits);
    case ActionType::kDecrement:
    case ActionType::kIncrement:
      if (a.size_bits == 0) return a.offset_bits == 0 && field_width(a.field, w) <= 64;
      return window_fits(a.offset_bits, a.size_bits, field_width(a.field, w));
    default:
      return true;
  }
}

bool entry_valid(const FlowEntry& e, std::size_t w) {
  if (e.actions.empty()) return false;
  return std::all_of(e.rules.begin(), e.rules.end(), [&](const Rule& r) { return rule_valid(r, w); }) &&
         std::all_of(e.actions.begin(), e.actions.end(),
                     [&](const Action& a) { return action_valid(a, w); });
}

std::optional<std::uint64_t> read_window(const Frame& f, Field field, std::size_t offset,
                                         std::size_t size) {
  const auto width = present_width(f, field);
  if (!width || !window_fits(offset, size, *width)) return std::nullopt;
  if (field != Field::kPayload) {
    return (scalar_value(f, field) >> (*width - offset - size)) & mask_of(size);
  }
  std::uint64_t v = 0;
  for (std::size_t bit = offset; bit < offset + size; ++bit) {
    const std::uint8_t byte = f.payload_window[bit / 8];
    v = (v << 1) | ((byte >> (7 - bit % 8)) & 1u);
  }
  return v;
}

std::uint64_t extract_window(const Frame& f, Field field, std::size_t offset, std::size_t size) {
  const auto width = present_width(f, field);
  if (!width) throw Error(Errc::kFieldAbsent, std::string(field_name(field)) + " absent from frame");
  if (!window_fits(offset, size, *width)) {
    throw Error(Errc::kWindowOutOfRange, std::string(field_name(field)) + " window [" +
                                             std::to_string(offset) + ", +" +
                                             std::to_string(size) + ") outside field");
  }
  return *read_window(f, field, offset, size);
}

bool write_window(Frame& f, Field field, std::size_t offset, std::size_t size,
                  std::uint64_t value) {
  const auto width = present_width(f, field);
  if (!width || !window_fits(offset, size, *width)) return false;
  value &= mask_of(size);
  if (field != Field::kPayload) {
    const std::size_t shift = *width - offset - size;
    const std::uint64_t m = mask_of(size) << shift;
    set_scalar(f, field, (scalar_value(f, field) & ~m) | (value << shift));
    return true;
  }
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t bit = offset + i;
    const std::uint8_t b = static_cast<std::uint8_t>((value >> (size - 1 - i)) & 1u);
    std::uint8_t& byte = f.payload_window[bit / 8];
    const std::uint8_t m = static_cast<std::uint8_t>(1u << (7 - bit % 8));
    byte = static_cast<std::uint8_t>(b ? (byte | m) : (byte & ~m));
  }
  return true;
}

bool compare(Op op, std::uint64_t lhs, std::uint64_t rhs) {
  switch (op) {
    case Op::kEq: return lhs == rhs;
    case Op::kNeq: return lhs != rhs;
    case Op::kLe: return lhs <= rhs;
    case Op::kGe: return lhs >= rhs;
    case Op::kLt: return lhs < rhs;
    case Op::kGt: return lhs > rhs;
  }
  return false;
}

bool entry_matches(const Frame& f, const FlowEntry& e) {
  for (const Rule& r : e.rules) {
    const auto v = read_window(f, r.field, r.offset_bits, r.size_bits);
    if (!v || !compare(r.op, *v, r.value)) return false;
  }
  return true;
}

ActionResult apply_actions(Frame frame, std::span<const Action> plan) {
  ActionResult out;
  bool disposed = false;
  for (const Action& a : plan) {
    switch (a.type) {
      case ActionType::kDrop:
        out.kind = DispositionKind::kDropped;
        out.frame = std::move(frame);
        return out;
      case ActionType::kForward:
        out.kind = DispositionKind::kForward;
        out.next_hop = ShortAddr{static_cast<std::uint16_t>(a.value)};
        disposed = true;
        break;
      case ActionType::kBroadcast:
        out.kind = DispositionKind::kBroadcast;
        disposed = true;
        break;
      case ActionType::kToUpperLayer:
        out.kind = DispositionKind::kToUpper;
        disposed = true;
        break;
      case ActionType::kContinue:
        break;
      case ActionType::kModify:
        if (!write_window(frame, a.field, a.offset_bits, a.size_bits, a.value)) {
          out.diagnostics.push_back(std::string("MODIFY skipped: ") + field_name(a.field) +
                                    " absent");
        }
        break;
      case ActionType::kDecrement:
      case ActionType::kIncrement: {
        const auto width = present_width(frame, a.field);
        const std::size_t size = a.size_bits == 0 && width ? *width : a.size_bits;
        const auto cur = read_window(frame, a.field, a.offset_bits, size);
        if (!cur) {
          out.diagnostics.push_back(std::string(action_name(a.type)) + " skipped: " +
                                    field_name(a.field) + " absent");
          break;
        }
        const std::uint64_t top = mask_of(size);
        std::uint64_t next;
        if (a.type == ActionType::kDecrement) {
          next = *cur > a.value ? *cur - a.value : 0;
        } else {
          next = top - *cur < a.value ? top : *cur + a.value;
        }
        write_window(frame, a.field, a.offset_bits, size, next);
        break;
      }
    }
  }
  if (!disposed) {
    out.kind = DispositionKind::kDropped;
    out.diagnostics.emplace_back("NoDisposition");
  }
  out.frame = std::move(frame);
  return out;
}

InstallResult FlowTable::install(FlowEntry e, SimTime now) {
  e.installed_at = now;
  e.lifetime_s = e.ttl_s;
  for (auto& cur : entries_) {
    if (cur.priority == e.priority && cur.rules == e.rules) {
      cur.actions = std::move(e.actions);
      cur.ttl_s = e.ttl_s;
      cur.lifetime_s = e.lifetime_s;
      return InstallResult::kReplaced;
    }
  }
  if (entries_.size() >= capacity_) {
    if (entries_.empty()) return InstallResult::kRejected;
    auto victim = std::min_element(entries_.begin(), entries_.end(),
                                   [](const FlowEntry& a, const FlowEntry& b) { return a.ttl_s < b.ttl_s; });
    if (victim->ttl_s != 0) return InstallResult::kRejected;
    seqs_.erase(seqs_.begin() + (victim - entries_.begin()));
    entries_.erase(victim);
  }
  const std::uint64_t seq = next_seq_++;
  std::size_t pos = 0;
  while (pos < entries_.size() &&
         std::tie(entries_[pos].priority, entries_[pos].installed_at, seqs_[pos]) <
             std::tie(e.priority, e.installed_at, seq)) {
    ++pos;
  }
  entries_.insert(entries_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(e));
  seqs_.insert(seqs_.begin() + static_cast<std::ptrdiff_t>(pos), seq);
  return InstallResult::kInstalled;
}

MatchOutcome FlowTable::lookup(const Frame& f) {
  MatchOutcome out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    FlowEntry& e = entries_[i];
    if (!entry_matches(f, e)) continue;
    ++e.stats_counter;
    e.ttl_s = e.lifetime_s;
    out.hits.push_back(i);
    out.plan.insert(out.plan.end(), e.actions.begin(), e.actions.end());
    if (e.actions.empty() || e.actions.back().type != ActionType::kContinue) break;
  }
  out.matched = !out.hits.empty();
  return out;
}

std::vector<FlowEntry> FlowTable::tick(std::uint32_t dt_s) {
  std::vector<FlowEntry> expired;
  for (std::size_t i = 0; i < entries_.size();) {
    FlowEntry& e = entries_[i];
    e.ttl_s = e.ttl_s > dt_s ? e.ttl_s - dt_s : 0;
    if (e.ttl_s == 0) {
      expired.push_back(std::move(e));
      entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i));
      seqs_.erase(seqs_.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  return expired;
}

}  // namespace sd6lo
