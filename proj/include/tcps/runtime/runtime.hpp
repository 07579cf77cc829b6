#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcps/kv/kvstore.hpp"
#include "tcps/net/latency_model.hpp"
#include "tcps/runtime/shard_plan.hpp"
#include "tcps/sim/engine.hpp"

namespace tcps::runtime {

inline constexpr int kMaxMemoryMb = 3008;

struct InvocationContext {
  std::string_view function;
  std::size_t shard = 0;
  SimTime t_start;
  SimTime t_end;
  const kv::KvStore& store;
};

/// A write produced by a handler; applied by the runtime at t_end.
struct KvWrite {
  std::string table;
  std::string key;
  kv::KvValue value;
  std::vector<TxnId> lineage;
};

using Handler = std::function<std::vector<KvWrite>(std::span<const kv::ChangeEvent>, const InvocationContext&)>;

struct FunctionSpec {
  std::string name;
  std::size_t capacity = 1;  // max records per invocation / vehicles per shard
  int memory_mb = 1024;
  Millis cold_start_ms = 0;
  Millis keep_alive_ms = 300'000;
  net::LatencyModel proc_model;
  double per_record_ms = 0.0;
  Handler handler;
  /// Records host wall time spent inside the handler. Never feeds back into
  /// simulated time.
  bool measure_host_time = false;
};

/// Throws std::invalid_argument if capacity or memory_mb are out of range.
void validate(const FunctionSpec& spec);

struct InvocationRecord {
  std::string function;
  std::size_t shard = 0;  // worker index in server-based mode
  std::vector<TxnId> trigger_txns;
  SimTime t_dispatch;
  SimTime t_start;
  SimTime t_end;
  std::size_t records_processed = 0;
  bool cold = false;
  std::int64_t host_handler_ns = -1;
};

enum class ExecutionMode { kServerless, kServerBased };

/// Fixed pool of server workers fed by one FIFO queue.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t worker_count);

  std::size_t worker_count() const { return busy_.size(); }
  std::optional<std::size_t> free_worker() const;
  void occupy(std::size_t worker, SimTime start, SimTime end);
  void release(std::size_t worker);
  /// Busy worker-time in [0, horizon].
  Millis busy_time(SimTime horizon) const;

 private:
  struct Interval {
    SimTime start;
    SimTime end;
  };
  std::vector<bool> busy_;
  std::vector<Interval> intervals_;
};

/// busy worker-time / (worker_count * horizon). Throws for horizon <= 0.
double utilization(const WorkerPool& pool, Millis horizon);

struct RuntimeObserver {
  std::function<void(const InvocationRecord&)> on_start;
  std::function<void(const InvocationRecord&)> on_end;
};

/// Emulated function runtime bound to key-value change streams.
///
/// Serverless mode routes each change event to its vehicle's shard; a shard
/// runs one invocation at a time, and events that arrive while it is busy
/// are batched (up to capacity) into the next invocation. A shard whose last
/// invocation ended more than keep_alive_ms ago (or that never ran) pays
/// cold_start_ms. Server-based mode queues every event FIFO in front of a
/// fixed worker pool, one event per invocation, with no cold starts.
///
/// Each invocation takes one draw from proc_model plus per_record_ms per
/// record. The handler sees the store as of t_start; its writes land at t_end.
class Runtime {
 public:
  Runtime(Engine& engine, kv::KvStore& store, ExecutionMode mode, std::size_t worker_count = 1,
          net::DayClock clock = {});
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  void register_function(FunctionSpec spec, std::string trigger_table);
  /// Builds every function's shard plan over the fleet.
  void set_fleet(std::span<const VehicleId> vehicles);
  void set_observer(RuntimeObserver observer) { observer_ = std::move(observer); }

  /// Routes the event to every function bound to its table. Returns the
  /// invocations started as a direct consequence (possibly none when the
  /// event was queued behind a busy shard or worker).
  std::vector<InvocationRecord> dispatch(const kv::ChangeEvent& event, SimTime at);

  std::optional<InvocationRecord> dispatch_serverless(std::size_t function, const kv::ChangeEvent& event,
                                                      SimTime at);
  std::optional<InvocationRecord> dispatch_server_based(std::size_t function, const kv::ChangeEvent& event,
                                                        SimTime at);

  ExecutionMode mode() const { return mode_; }
  const std::vector<InvocationRecord>& invocations() const { return invocations_; }
  const WorkerPool& pool() const { return pool_; }
  const ShardPlan& plan(std::string_view function) const;
  std::size_t function_index(std::string_view function) const;

 private:
  struct Pending {
    kv::ChangeEvent event;
    SimTime at;
  };
  struct Shard {
    std::deque<Pending> pending;
    bool busy = false;
    std::optional<SimTime> last_end;
  };
  struct Function {
    FunctionSpec spec;
    std::string trigger_table;
    ShardPlan plan;
    std::vector<Shard> shards;
  };
  struct QueuedEvent {
    std::size_t function;
    Pending pending;
  };

  InvocationRecord start_invocation(std::size_t function, std::size_t shard, std::vector<Pending> batch,
                                    SimTime t_start, bool cold);
  void finish_invocation(std::size_t function, std::size_t invocation, std::vector<Pending> batch);
  std::optional<InvocationRecord> begin_shard_batch(std::size_t function, std::size_t shard, SimTime now);
  std::optional<InvocationRecord> begin_worker(SimTime now);
  std::size_t shard_for(const Function& fn, const kv::ChangeEvent& event) const;

  Engine& engine_;
  kv::KvStore& store_;
  ExecutionMode mode_;
  net::DayClock clock_;
  RngStream proc_rng_;
  std::vector<Function> functions_;
  std::vector<InvocationRecord> invocations_;
  WorkerPool pool_;
  std::deque<QueuedEvent> server_queue_;
  RuntimeObserver observer_;
};

/// Writes the invocation log as CSV: function,shard,t_dispatch,t_start,t_end,records,cold
void write_invocations_csv(std::ostream& out, std::span<const InvocationRecord> invocations);

}  // namespace tcps::runtime
