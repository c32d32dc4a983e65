// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/packet.hpp"

#include <algorithm>
#include <cstdio>

namespace sd6lo {

std::string to_string(ShortAddr a) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "0x%04X", a.value);
  return buf;
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::kDatagramTooLarge: return "DatagramTooLarge";
    case Errc::kInconsistentSize: return "InconsistentSize";
    case Errc::kFieldAbsent: return "FieldAbsent";
    case Errc::kWindowOutOfRange: return "WindowOutOfRange";
    case Errc::kMalformedPayload: return "MalformedPayload";
    case Errc::kTransmissionTimeout: return "TransmissionTimeout";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kParseError: return "ParseError";
    case Errc::kValidationError: return "ValidationError";
    case Errc::kIoError: return "IoError";
  }
  return "Unknown";
}

const char* category_name(MessageCategory c) {
  switch (c) {
    case MessageCategory::kDio: return "DIO";
    case MessageCategory::kDao: return "DAO";
    case MessageCategory::kTopologyUpdate: return "TOPOLOGY_UPDATE";
    case MessageCategory::kTableMissReq: return "TABLE_MISS_REQ";
    case MessageCategory::kTableMissResp: return "TABLE_MISS_RESP";
    case MessageCategory::kFlowPut: return "FLOW_PUT";
    case MessageCategory::kOtherSbi: return "OTHER_SBI";
    case MessageCategory::kData: return "DATA";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> payload_window_of(const Datagram& d, std::size_t window) {
  const std::size_t n = std::min<std::size_t>(window, d.app_payload_len);
  std::vector<std::uint8_t> out(n, 0);
  std::copy_n(d.body.begin(), std::min(n, d.body.size()), out.begin());
  return out;
}

std::size_t on_air_bytes(const Frame& f, const LinkLimits& limits) {
  std::size_t n = limits.mac_overhead + f.payload_len;
  if (f.mesh) n += MeshHeader::kEncodedSize;
  if (f.frag) n += f.frag->encoded_size();
  return n;
}

FragmentBudget fragment_budget(bool with_mesh, const LinkLimits& limits) {
  const std::size_t whole =
      limits.max_frame - limits.mac_overhead - (with_mesh ? MeshHeader::kEncodedSize : 0);
  return {whole, (whole - 4) / 8 * 8, (whole - 5) / 8 * 8};
}

std::size_t fragment_count(std::size_t total, bool with_mesh, const LinkLimits& limits) {
  const auto b = fragment_budget(with_mesh, limits);
  if (total <= b.whole) return 1;
  return 1 + (total - b.first + b.subsequent - 1) / b.subsequent;
}

std::vector<Frame> fragment(const DatagramPtr& d, const std::optional<MeshHeader>& mesh,
                            const LinkLimits& limits, std::uint16_t tag) {
  const std::size_t total = d->compressed_total();
  if (total > kMaxDatagramSize) {
    throw Error(Errc::kDatagramTooLarge,
                "datagram of " + std::to_string(total) + " bytes exceeds 2047");
  }
  const auto window = payload_window_of(*d, limits.payload_window);
  const auto budget = fragment_budget(mesh.has_value(), limits);

  std::vector<Frame> frames;
  auto make = [&](std::size_t len) {
    Frame f;
    f.mesh = mesh;
    f.payload_len = static_cast<std::uint16_t>(len);
    f.payload_window = window;
    f.datagram = d;
    return f;
  };

  if (total <= budget.whole) {
    frames.push_back(make(total));
    return frames;
  }

  std::size_t offset = 0;
  while (offset < total) {
    const bool first = offset == 0;
    const std::size_t cap = first ? budget.first : budget.subsequent;
    const std::size_t len = std::min(cap, total - offset);
    Frame f = make(len);
    f.frag = FragHeader{static_cast<std::uint16_t>(total), tag,
                        static_cast<std::uint16_t>(offset / 8), first};
    frames.push_back(std::move(f));
    offset += len;
  }
  return frames;
}

ReassemblyResult ReassemblyBuffer::add(const Frame& f, SimTime now) {
  if (!f.frag) {
    return {ReassemblyStatus::kComplete, f.datagram, f.payload_window};
  }
  const ShortAddr origin = f.mesh ? f.mesh->originator : f.mac_src;
  const Key key{origin.value, f.frag->tag};

  auto it = pending_.find(key);
  if (it != pending_.end() && now - it->second.started > timeout_) {
    pending_.erase(it);
    return {ReassemblyStatus::kStale, nullptr, {}};
  }
  if (it == pending_.end()) {
    Pending p;
    p.datagram_size = f.frag->datagram_size;
    p.started = now;
    it = pending_.emplace(key, std::move(p)).first;
  } else if (it->second.datagram_size != f.frag->datagram_size) {
    throw Error(Errc::kInconsistentSize,
                "fragment tag " + std::to_string(f.frag->tag) + " from " + to_string(origin) +
                    " declares size " + std::to_string(f.frag->datagram_size) + " but " +
                    std::to_string(it->second.datagram_size) + " was recorded");
  }

  Pending& p = it->second;
  p.pieces[static_cast<std::uint16_t>(f.frag->offset_units * 8)] = f.payload_len;
  if (!p.datagram) {
    p.datagram = f.datagram;
    p.payload_window = f.payload_window;
  }

  std::size_t covered = 0;
  for (const auto& [off, len] : p.pieces) {
    if (off > covered) return {ReassemblyStatus::kIncomplete, nullptr, {}};
    covered = std::max<std::size_t>(covered, off + static_cast<std::size_t>(len));
  }
  if (covered < p.datagram_size) return {ReassemblyStatus::kIncomplete, nullptr, {}};

  ReassemblyResult done{ReassemblyStatus::kComplete, std::move(p.datagram),
                        std::move(p.payload_window)};
  pending_.erase(it);
  return done;
}

std::size_t ReassemblyBuffer::purge(SimTime now) {
  return std::erase_if(pending_,
                       [&](const auto& kv) { return now - kv.second.started > timeout_; });
}

}  // namespace sd6lo
