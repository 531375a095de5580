#pragma once

#include <cstdint>
#include <queue>
#include <utility>
#include <vector>

#include "fhsim/error.hpp"
#include "fhsim/time.hpp"

namespace fhsim {

// Deterministic event queue: events execute in (time, seq) order where seq is
// a global monotone tiebreaker assigned at schedule time. Same-time events
// therefore run in insertion order.
template <class Action>
class EventQueue {
 public:
  struct Event {
    SimTime time;
    std::uint64_t seq;
    Action action;
  };

  std::uint64_t schedule(SimTime at, Action action) {
    if (at < now_) {
      raise(Errc::TimeInPast, "schedule at " + format_seconds(at) + " before now " +
                                  format_seconds(now_));
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(Event{at, seq, std::move(action)});
    std::push_heap(heap_.begin(), heap_.end(), later);
    return seq;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime now() const { return now_; }

  const Event& peek() const { return heap_.front(); }

  Event pop() {
    std::pop_heap(heap_.begin(), heap_.end(), later);
    Event ev = std::move(heap_.back());
    heap_.pop_back();
    now_ = ev.time;
    return ev;
  }

  // Events still queued (used for in-flight accounting when a run is cut off
  // at t_end).
  const std::vector<Event>& pending() const { return heap_; }

 private:
  static bool later(const Event& a, const Event& b) {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }

  std::vector<Event> heap_;
  std::uint64_t next_seq_ = 0;
  SimTime now_ = 0;
};

}  // namespace fhsim
