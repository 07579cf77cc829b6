#include "tcps/sim/engine.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace tcps {
namespace {

// Heap comparator: "a fires after b" puts the earliest event on top.
bool fires_after(const ScheduledEvent& a, const ScheduledEvent& b) {
  if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
  return a.seq > b.seq;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kBsmEmit: return "bsm-emit";
    case EventKind::kKvWriteArrival: return "kv-write-arrival";
    case EventKind::kInvokeStart: return "invoke-start";
    case EventKind::kInvokeEnd: return "invoke-end";
    case EventKind::kFeedbackArrival: return "feedback-arrival";
    case EventKind::kBucketRollover: return "bucket-rollover";
    case EventKind::kOther: return "other";
  }
  return "other";
}

std::string summarize(const EventPayload& p) {
  switch (p.kind) {
    case EventKind::kBsmEmit: return fmt::format("vehicle={} seq={}", p.subject, p.detail);
    case EventKind::kKvWriteArrival: return fmt::format("vehicle={} txn={}", p.subject, p.detail);
    case EventKind::kInvokeStart:
    case EventKind::kInvokeEnd: return fmt::format("shard={} records={}", p.subject, p.detail);
    case EventKind::kFeedbackArrival: return fmt::format("vehicle={} stream_seq={}", p.subject, p.detail);
    case EventKind::kBucketRollover: return fmt::format("bucket={}", p.subject);
    case EventKind::kOther: break;
  }
  return fmt::format("a={} b={}", p.subject, p.detail);
}

std::string format_trace_line(const ScheduledEvent& e) {
  return fmt::format("{}\t{}\t{}\t{}", e.fire_at.millis(), e.seq, to_string(e.payload.kind), summarize(e.payload));
}

std::uint64_t Engine::schedule(SimTime fire_at, EventPayload payload, std::function<void()> action) {
  if (fire_at < clock_) {
    throw std::logic_error(fmt::format("event scheduled in the past: fire_at={} clock={}", fire_at.millis(),
                                       clock_.millis()));
  }
  const std::uint64_t seq = next_seq_++;
  queue_.push_back(ScheduledEvent{fire_at, seq, payload, std::move(action)});
  std::push_heap(queue_.begin(), queue_.end(), fires_after);
  return seq;
}

void Engine::fire_next() {
  std::pop_heap(queue_.begin(), queue_.end(), fires_after);
  ScheduledEvent event = std::move(queue_.back());
  queue_.pop_back();
  clock_ = event.fire_at;
  ++processed_;
  if (trace_sink_) trace_sink_(event);
  if (event.action) event.action();
}

std::size_t Engine::run_until(SimTime end) {
  std::size_t count = 0;
  while (!queue_.empty() && queue_.front().fire_at <= end) {
    fire_next();
    ++count;
  }
  if (end > clock_) clock_ = end;
  return count;
}

std::size_t Engine::run_to_quiescence() {
  std::size_t count = 0;
  while (!queue_.empty()) {
    fire_next();
    ++count;
  }
  return count;
}

}  // namespace tcps
