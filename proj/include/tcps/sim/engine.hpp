#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tcps/sim/rng.hpp"
#include "tcps/sim/time.hpp"

namespace tcps {

enum class EventKind : std::uint8_t {
  kBsmEmit,
  kKvWriteArrival,
  kInvokeStart,
  kInvokeEnd,
  kFeedbackArrival,
  kBucketRollover,
  kOther,
};

std::string_view to_string(EventKind kind);

/// Describes what an event is about, for trace logs. The meaning of
/// `subject`/`detail` depends on the kind (see summarize()).
struct EventPayload {
  EventKind kind = EventKind::kOther;
  std::int64_t subject = 0;
  std::int64_t detail = 0;
};

struct ScheduledEvent {
  SimTime fire_at;
  std::uint64_t seq = 0;
  EventPayload payload;
  std::function<void()> action;
};

std::string summarize(const EventPayload& payload);
/// fire_at \t seq \t kind \t summary
std::string format_trace_line(const ScheduledEvent& event);

/// Single-threaded discrete-event scheduler. Events are processed in
/// (fire_at, seq) order; seq is assigned at scheduling time so ties fire in
/// insertion order.
///
/// Actions capture references into the owning simulation, so an Engine is
/// pinned in memory; move whole simulations by owning pointer.
class Engine {
 public:
  explicit Engine(std::uint64_t master_seed) : master_seed_(master_seed) {}
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  SimTime now() const { return clock_; }
  std::uint64_t master_seed() const { return master_seed_; }

  /// Throws std::logic_error if `fire_at` is earlier than the clock.
  std::uint64_t schedule(SimTime fire_at, EventPayload payload, std::function<void()> action);

  /// Processes every event with fire_at <= end, then sets the clock to end.
  std::size_t run_until(SimTime end);
  /// Processes events until the queue is empty. The clock stays at the last
  /// processed event.
  std::size_t run_to_quiescence();

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t processed() const { return processed_; }

  RngStream rng_stream(std::string_view label) const { return RngStream(master_seed_, label); }

  /// Called for every processed event, before its action runs.
  void set_trace_sink(std::function<void(const ScheduledEvent&)> sink) { trace_sink_ = std::move(sink); }

 private:
  void fire_next();

  std::uint64_t master_seed_;
  SimTime clock_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  std::vector<ScheduledEvent> queue_;  // min-heap on (fire_at, seq)
  std::function<void(const ScheduledEvent&)> trace_sink_;
};

}  // namespace tcps
