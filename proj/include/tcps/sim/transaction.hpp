#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tcps/sim/time.hpp"

namespace tcps {

using TxnId = std::uint64_t;
using VehicleId = std::uint32_t;

/// End-to-end timeline of one vehicle message, from emission to feedback.
struct TransactionTrace {
  TxnId txn_id = 0;
  VehicleId vehicle_id = 0;
  SimTime t_emit;
  std::optional<SimTime> t_stored;
  std::optional<SimTime> t_invoke_start;
  std::optional<SimTime> t_invoke_end;
  std::optional<SimTime> t_feedback;

  bool complete() const { return t_feedback.has_value(); }
  /// t_feedback - t_emit; only valid for complete traces.
  Millis total_ms() const { return *t_feedback - t_emit; }
};

/// Registry of transaction traces. Txn ids are dense indices starting at 0.
/// Each mark_* call enforces the stage order emit <= stored <= invoke_start
/// <= invoke_end <= feedback and throws std::logic_error otherwise.
class TransactionLog {
 public:
  TxnId open(VehicleId vehicle, SimTime t_emit);
  void mark_stored(TxnId id, SimTime t);
  void mark_invoke_start(TxnId id, SimTime t);
  void mark_invoke_end(TxnId id, SimTime t);
  void mark_feedback(TxnId id, SimTime t);

  const TransactionTrace& at(TxnId id) const;
  const std::vector<TransactionTrace>& traces() const { return traces_; }

  std::size_t opened() const { return traces_.size(); }
  std::size_t closed() const { return closed_; }
  std::size_t in_flight() const { return traces_.size() - closed_; }

 private:
  TransactionTrace& mut(TxnId id);

  std::vector<TransactionTrace> traces_;
  std::size_t closed_ = 0;
};

}  // namespace tcps
