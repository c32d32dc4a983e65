// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

#include "sd6lo/event_queue.hpp"

#include <utility>

namespace sd6lo {

EventId EventQueue::schedule_at(SimTime at, Callback cb) {
  if (at < now_) at = now_;
  const EventId id = next_seq_++;
  heap_.push(Event{at, id, std::move(cb)});
  return id;
}

bool EventQueue::step(SimTime until) {
  while (!heap_.empty()) {
    if (heap_.top().fire_at > until) return false;
    // priority_queue::top is const; the callback is moved out before pop.
    Event ev = std::move(const_cast<Event&>(heap_.top()));
    heap_.pop();
    if (!cancelled_.empty()) {
      if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
        cancelled_.erase(it);
        continue;
      }
    }
    now_ = ev.fire_at;
    ++executed_;
    ev.cb();
    return true;
  }
  return false;
}

void EventQueue::run_until(SimTime until) {
  while (step(until)) {
  }
  if (now_ < until) now_ = until;
}

void EventQueue::run() {
  while (step(INT64_MAX)) {
  }
}

}  // namespace sd6lo
