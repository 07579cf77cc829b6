#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcps/sim/engine.hpp"
#include "tcps/sim/transaction.hpp"

namespace tcps::kv {

using Scalar = std::variant<std::int64_t, double, std::string>;
using KvValue = std::map<std::string, Scalar, std::less<>>;

/// One stored version of a key. `lineage` lists the transactions whose
/// processing produced this write; it travels with the change stream so
/// downstream consumers can attribute deliveries.
struct KvRecord {
  std::string table;
  std::string key;
  KvValue value;
  std::uint64_t version = 0;
  SimTime write_time;
  std::vector<TxnId> lineage;
};

using RecordPtr = std::shared_ptr<const KvRecord>;

struct ChangeEvent {
  std::uint64_t stream_seq = 0;  // gap-free per table, starting at 1
  SimTime event_time;
  RecordPtr record;

  const std::string& table() const { return record->table; }
  const std::string& key() const { return record->key; }
  const KvValue& new_value() const { return record->value; }
};

struct Subscription {
  std::uint64_t sub_id = 0;
  std::string table;
  std::string key_prefix;
  std::uint64_t subscriber = 0;
};

class UnknownTable : public std::out_of_range {
 public:
  explicit UnknownTable(std::string_view table);
};

/// Emulated key-value store with per-table change streams.
///
/// A put synchronously notifies the table's change listeners (trigger
/// bindings) at the write time, and schedules one delivery per matching
/// subscription after a sampled delay.
class KvStore {
 public:
  using ChangeListener = std::function<void(const ChangeEvent&)>;
  using DelaySampler = std::function<Millis(SimTime at)>;
  using DeliverySink = std::function<void(const Subscription&, const ChangeEvent&)>;

  explicit KvStore(Engine& engine) : engine_(engine) {}
  KvStore(const KvStore&) = delete;
  KvStore& operator=(const KvStore&) = delete;

  void create_table(std::string name);
  bool has_table(std::string_view name) const;

  RecordPtr put(std::string_view table, std::string key, KvValue value, SimTime at,
                std::vector<TxnId> lineage = {});
  /// Value of the highest version written at or before `at`.
  std::optional<KvValue> get(std::string_view table, std::string_view key, SimTime at) const;
  /// Records whose key starts with `key_prefix` and whose write_time lies in
  /// (at - window_ms, at], ordered by write_time, then key, then version.
  std::vector<RecordPtr> scan_recent(std::string_view table, std::string_view key_prefix, Millis window_ms,
                                     SimTime at) const;
  /// Same selection and order as scan_recent, without materializing a list.
  void visit_recent(std::string_view table, std::string_view key_prefix, Millis window_ms, SimTime at,
                    const std::function<void(const KvRecord&)>& visit) const;

  Subscription subscribe(std::string_view table, std::string key_prefix, std::uint64_t subscriber);
  bool unsubscribe(std::uint64_t sub_id);
  std::size_t active_subscriptions() const { return sub_tables_.size(); }

  void add_change_listener(std::string_view table, ChangeListener listener);
  /// Without a configured delivery path, subscription matches are counted but
  /// not scheduled.
  void set_delivery(DelaySampler delay, DeliverySink sink);

  const std::vector<ChangeEvent>& stream(std::string_view table) const;
  std::uint64_t deliveries_scheduled() const { return deliveries_scheduled_; }

  /// key -> {value, version, write_time} for the latest version of each key.
  nlohmann::json dump(std::string_view table) const;

 private:
  struct Table {
    std::unordered_map<std::string, std::vector<RecordPtr>> versions;
    std::vector<RecordPtr> by_time;  // sorted by (write_time, key, version)
    std::vector<ChangeEvent> stream;
    std::vector<ChangeListener> listeners;
    std::map<std::uint64_t, Subscription> subscriptions;
  };

  Table& table(std::string_view name);
  const Table& table(std::string_view name) const;
  template <typename Fn>
  void for_range(std::string_view table, Millis window_ms, SimTime at, Fn&& fn) const;

  Engine& engine_;
  std::map<std::string, Table, std::less<>> tables_;
  std::map<std::uint64_t, std::string> sub_tables_;  // sub_id -> table
  std::uint64_t next_sub_id_ = 1;
  std::uint64_t deliveries_scheduled_ = 0;
  DelaySampler delay_;
  DeliverySink sink_;
};

nlohmann::json to_json(const Scalar& s);
nlohmann::json to_json(const KvValue& v);

/// Typed field accessors; return nullopt on a missing field or type mismatch.
std::optional<double> get_number(const KvValue& v, std::string_view field);
std::optional<std::int64_t> get_int(const KvValue& v, std::string_view field);
std::optional<std::string> get_string(const KvValue& v, std::string_view field);

}  // namespace tcps::kv
