#include "tcps/sim/transaction.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace tcps {
namespace {

void require_after(const std::optional<SimTime>& prev, SimTime t, TxnId id, const char* stage) {
  if (!prev) throw std::logic_error(fmt::format("txn {}: {} marked before its predecessor stage", id, stage));
  if (t < *prev) throw std::logic_error(fmt::format("txn {}: {} earlier than predecessor stage", id, stage));
}

void require_unset(const std::optional<SimTime>& slot, TxnId id, const char* stage) {
  if (slot) throw std::logic_error(fmt::format("txn {}: {} marked twice", id, stage));
}

}  // namespace

TxnId TransactionLog::open(VehicleId vehicle, SimTime t_emit) {
  const TxnId id = traces_.size();
  traces_.push_back(TransactionTrace{.txn_id = id, .vehicle_id = vehicle, .t_emit = t_emit});
  return id;
}

TransactionTrace& TransactionLog::mut(TxnId id) {
  if (id >= traces_.size()) throw std::out_of_range(fmt::format("unknown txn {}", id));
  return traces_[id];
}

const TransactionTrace& TransactionLog::at(TxnId id) const {
  if (id >= traces_.size()) throw std::out_of_range(fmt::format("unknown txn {}", id));
  return traces_[id];
}

void TransactionLog::mark_stored(TxnId id, SimTime t) {
  auto& tr = mut(id);
  require_unset(tr.t_stored, id, "stored");
  require_after(tr.t_emit, t, id, "stored");
  tr.t_stored = t;
}

void TransactionLog::mark_invoke_start(TxnId id, SimTime t) {
  auto& tr = mut(id);
  require_unset(tr.t_invoke_start, id, "invoke_start");
  require_after(tr.t_stored, t, id, "invoke_start");
  tr.t_invoke_start = t;
}

void TransactionLog::mark_invoke_end(TxnId id, SimTime t) {
  auto& tr = mut(id);
  require_unset(tr.t_invoke_end, id, "invoke_end");
  require_after(tr.t_invoke_start, t, id, "invoke_end");
  tr.t_invoke_end = t;
}

void TransactionLog::mark_feedback(TxnId id, SimTime t) {
  auto& tr = mut(id);
  require_unset(tr.t_feedback, id, "feedback");
  require_after(tr.t_invoke_end, t, id, "feedback");
  tr.t_feedback = t;
  ++closed_;
}

}  // namespace tcps
