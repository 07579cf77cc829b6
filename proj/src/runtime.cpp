#include "tcps/runtime/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace tcps::runtime {

void validate(const FunctionSpec& spec) {
  if (spec.name.empty()) throw std::invalid_argument("function name must not be empty");
  if (spec.capacity < 1) throw std::invalid_argument(fmt::format("function '{}': capacity must be >= 1", spec.name));
  if (spec.memory_mb <= 0 || spec.memory_mb > kMaxMemoryMb) {
    throw std::invalid_argument(
        fmt::format("function '{}': memory_mb {} outside (0, {}]", spec.name, spec.memory_mb, kMaxMemoryMb));
  }
  if (spec.cold_start_ms < 0 || spec.keep_alive_ms < 0 || spec.per_record_ms < 0.0) {
    throw std::invalid_argument(fmt::format("function '{}': negative timing parameter", spec.name));
  }
  if (!spec.handler) throw std::invalid_argument(fmt::format("function '{}': no handler", spec.name));
}

// --- WorkerPool ---

WorkerPool::WorkerPool(std::size_t worker_count) : busy_(worker_count, false) {
  if (worker_count < 1) throw std::invalid_argument("worker pool needs at least one worker");
}

std::optional<std::size_t> WorkerPool::free_worker() const {
  for (std::size_t i = 0; i < busy_.size(); ++i) {
    if (!busy_[i]) return i;
  }
  return std::nullopt;
}

void WorkerPool::occupy(std::size_t worker, SimTime start, SimTime end) {
  if (busy_.at(worker)) throw std::logic_error("worker already busy");
  busy_[worker] = true;
  intervals_.push_back({start, end});
}

void WorkerPool::release(std::size_t worker) { busy_.at(worker) = false; }

Millis WorkerPool::busy_time(SimTime horizon) const {
  Millis total = 0;
  for (const auto& iv : intervals_) {
    const SimTime end = std::min(iv.end, horizon);
    if (end > iv.start) total += end - iv.start;
  }
  return total;
}

double utilization(const WorkerPool& pool, Millis horizon) {
  if (horizon <= 0) throw std::invalid_argument("utilization horizon must be positive");
  return static_cast<double>(pool.busy_time(SimTime(horizon))) /
         (static_cast<double>(pool.worker_count()) * static_cast<double>(horizon));
}

// --- Runtime ---

Runtime::Runtime(Engine& engine, kv::KvStore& store, ExecutionMode mode, std::size_t worker_count,
                 net::DayClock clock)
    : engine_(engine),
      store_(store),
      mode_(mode),
      clock_(clock),
      proc_rng_(engine.rng_stream("process")),
      pool_(worker_count) {}

void Runtime::register_function(FunctionSpec spec, std::string trigger_table) {
  validate(spec);
  if (!store_.has_table(trigger_table)) throw kv::UnknownTable(trigger_table);
  for (const auto& fn : functions_) {
    if (fn.spec.name == spec.name) {
      throw std::invalid_argument(fmt::format("function '{}' already registered", spec.name));
    }
  }
  const bool first_on_table = std::none_of(functions_.begin(), functions_.end(),
                                           [&](const Function& f) { return f.trigger_table == trigger_table; });
  functions_.push_back(Function{std::move(spec), trigger_table, {}, {}});
  if (first_on_table) {
    store_.add_change_listener(trigger_table, [this](const kv::ChangeEvent& e) { dispatch(e, e.event_time); });
  }
}

void Runtime::set_fleet(std::span<const VehicleId> vehicles) {
  for (auto& fn : functions_) {
    fn.plan = plan_shards(vehicles, fn.spec.capacity);
    fn.shards.assign(fn.plan.shard_count, Shard{});
  }
}

const ShardPlan& Runtime::plan(std::string_view function) const {
  return functions_.at(function_index(function)).plan;
}

std::size_t Runtime::function_index(std::string_view function) const {
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    if (functions_[i].spec.name == function) return i;
  }
  throw std::out_of_range(fmt::format("unknown function '{}'", function));
}

std::vector<InvocationRecord> Runtime::dispatch(const kv::ChangeEvent& event, SimTime at) {
  std::vector<InvocationRecord> started;
  bool bound = false;
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    if (functions_[i].trigger_table != event.table()) continue;
    bound = true;
    auto rec = mode_ == ExecutionMode::kServerless ? dispatch_serverless(i, event, at)
                                                   : dispatch_server_based(i, event, at);
    if (rec) started.push_back(std::move(*rec));
  }
  if (!bound) throw std::logic_error(fmt::format("no function bound to table '{}'", event.table()));
  return started;
}

std::size_t Runtime::shard_for(const Function& fn, const kv::ChangeEvent& event) const {
  const auto vehicle = kv::get_int(event.new_value(), "vehicle_id");
  if (!vehicle) throw std::invalid_argument(fmt::format("change event for '{}' carries no vehicle_id", event.key()));
  auto it = fn.plan.assignment.find(static_cast<VehicleId>(*vehicle));
  if (it == fn.plan.assignment.end()) {
    throw std::logic_error(fmt::format("vehicle {} is not in the shard plan of '{}'", *vehicle, fn.spec.name));
  }
  return it->second;
}

std::optional<InvocationRecord> Runtime::dispatch_serverless(std::size_t function, const kv::ChangeEvent& event,
                                                             SimTime at) {
  Function& fn = functions_.at(function);
  const std::size_t shard = shard_for(fn, event);
  Shard& s = fn.shards[shard];
  s.pending.push_back({event, at});
  if (s.busy) return std::nullopt;
  return begin_shard_batch(function, shard, at);
}

std::optional<InvocationRecord> Runtime::begin_shard_batch(std::size_t function, std::size_t shard, SimTime now) {
  Function& fn = functions_[function];
  Shard& s = fn.shards[shard];
  if (s.pending.empty()) return std::nullopt;

  std::vector<Pending> batch;
  const std::size_t n = std::min(fn.spec.capacity, s.pending.size());
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back(std::move(s.pending.front()));
    s.pending.pop_front();
  }
  const bool cold = !s.last_end || now - *s.last_end > fn.spec.keep_alive_ms;
  const SimTime t_start = now + (cold ? fn.spec.cold_start_ms : 0);
  s.busy = true;
  return start_invocation(function, shard, std::move(batch), t_start, cold);
}

std::optional<InvocationRecord> Runtime::dispatch_server_based(std::size_t function, const kv::ChangeEvent& event,
                                                               SimTime at) {
  functions_.at(function);
  server_queue_.push_back({function, {event, at}});
  return begin_worker(at);
}

std::optional<InvocationRecord> Runtime::begin_worker(SimTime now) {
  std::optional<InvocationRecord> first;
  while (!server_queue_.empty()) {
    const auto worker = pool_.free_worker();
    if (!worker) break;
    QueuedEvent q = std::move(server_queue_.front());
    server_queue_.pop_front();
    std::vector<Pending> batch;
    batch.push_back(std::move(q.pending));
    auto rec = start_invocation(q.function, *worker, std::move(batch), now, false);
    pool_.occupy(*worker, rec.t_start, rec.t_end);
    if (!first) first = std::move(rec);
  }
  return first;
}

InvocationRecord Runtime::start_invocation(std::size_t function, std::size_t shard, std::vector<Pending> batch,
                                           SimTime t_start, bool cold) {
  const Function& fn = functions_[function];
  const Millis proc = net::sample(fn.spec.proc_model, t_start, clock_, proc_rng_) +
                      round_half_up(fn.spec.per_record_ms * static_cast<double>(batch.size()));

  InvocationRecord rec{
      .function = fn.spec.name,
      .shard = shard,
      .trigger_txns = {},
      .t_dispatch = batch.front().at,
      .t_start = t_start,
      .t_end = t_start + proc,
      .records_processed = batch.size(),
      .cold = cold,
  };
  for (const auto& p : batch) {
    rec.t_dispatch = std::min(rec.t_dispatch, p.at);
    const auto& lineage = p.event.record->lineage;
    rec.trigger_txns.insert(rec.trigger_txns.end(), lineage.begin(), lineage.end());
  }

  const std::size_t index = invocations_.size();
  invocations_.push_back(rec);
  const auto records = static_cast<std::int64_t>(rec.records_processed);
  const auto subject = static_cast<std::int64_t>(shard);

  engine_.schedule(rec.t_start, {EventKind::kInvokeStart, subject, records}, [this, index] {
    if (observer_.on_start) observer_.on_start(invocations_[index]);
  });
  engine_.schedule(rec.t_end, {EventKind::kInvokeEnd, subject, records},
                   [this, function, index, batch = std::move(batch)]() mutable {
                     finish_invocation(function, index, std::move(batch));
                   });
  return rec;
}

void Runtime::finish_invocation(std::size_t function, std::size_t index, std::vector<Pending> batch) {
  Function& fn = functions_[function];
  const InvocationRecord rec = invocations_[index];

  std::vector<kv::ChangeEvent> events;
  events.reserve(batch.size());
  for (auto& p : batch) events.push_back(std::move(p.event));

  const InvocationContext ctx{fn.spec.name, rec.shard, rec.t_start, rec.t_end, store_};
  std::vector<KvWrite> writes;
  if (fn.spec.measure_host_time) {
    const auto t0 = std::chrono::steady_clock::now();
    writes = fn.spec.handler(events, ctx);
    invocations_[index].host_handler_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
  } else {
    writes = fn.spec.handler(events, ctx);
  }

  if (observer_.on_end) observer_.on_end(invocations_[index]);
  for (auto& w : writes) store_.put(w.table, std::move(w.key), std::move(w.value), rec.t_end, std::move(w.lineage));

  if (mode_ == ExecutionMode::kServerless) {
    Shard& s = fn.shards[rec.shard];
    s.busy = false;
    s.last_end = rec.t_end;
    begin_shard_batch(function, rec.shard, rec.t_end);
  } else {
    pool_.release(rec.shard);
    begin_worker(rec.t_end);
  }
}

void write_invocations_csv(std::ostream& out, std::span<const InvocationRecord> invocations) {
  out << "function,shard,t_dispatch,t_start,t_end,records,cold\n";
  for (const auto& r : invocations) {
    out << fmt::format("{},{},{},{},{},{},{}\n", r.function, r.shard, r.t_dispatch.millis(), r.t_start.millis(),
                       r.t_end.millis(), r.records_processed, r.cold ? 1 : 0);
  }
}

}  // namespace tcps::runtime
