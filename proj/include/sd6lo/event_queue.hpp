// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SD6LO_EVENT_QUEUE_HPP
#define SD6LO_EVENT_QUEUE_HPP

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "sd6lo/types.hpp"

namespace sd6lo {

using EventId = std::uint64_t;

/// Single-threaded event list with a total (fire_at, seq) order; seq is
/// assigned when the event is scheduled.
class EventQueue {
 public:
  using Callback = std::function<void()>;

  SimTime now() const { return now_; }

  EventId schedule_at(SimTime at, Callback cb);
  EventId schedule_in(SimTime delay, Callback cb) { return schedule_at(now_ + delay, std::move(cb)); }
  void cancel(EventId id) { cancelled_.insert(id); }

  /// Runs events with fire_at <= until; the clock ends at `until`.
  void run_until(SimTime until);
  /// Runs until the queue is empty.
  void run();
  bool empty() const { return heap_.empty(); }
  std::uint64_t executed() const { return executed_; }

 private:
  struct Event {
    SimTime fire_at;
    EventId seq;
    Callback cb;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.fire_at != b.fire_at ? a.fire_at > b.fire_at : a.seq > b.seq;
    }
  };

  bool step(SimTime until);

  SimTime now_ = 0;
  EventId next_seq_ = 1;
  std::uint64_t executed_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::unordered_set<EventId> cancelled_;
};

}  // namespace sd6lo

#endif  // SD6LO_EVENT_QUEUE_HPP
