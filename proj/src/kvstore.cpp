#include "tcps/kv/kvstore.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace tcps::kv {

UnknownTable::UnknownTable(std::string_view table)
    : std::out_of_range(fmt::format("unknown table '{}'", table)) {}

void KvStore::create_table(std::string name) {
  if (tables_.contains(name)) throw std::invalid_argument(fmt::format("table '{}' already exists", name));
  tables_.emplace(std::move(name), Table{});
}

bool KvStore::has_table(std::string_view name) const { return tables_.find(name) != tables_.end(); }

KvStore::Table& KvStore::table(std::string_view name) {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw UnknownTable(name);
  return it->second;
}

const KvStore::Table& KvStore::table(std::string_view name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw UnknownTable(name);
  return it->second;
}

RecordPtr KvStore::put(std::string_view table_name, std::string key, KvValue value, SimTime at,
                       std::vector<TxnId> lineage) {
  Table& t = table(table_name);
  auto& versions = t.versions[key];
  if (!versions.empty() && at < versions.back()->write_time) {
    throw std::logic_error(fmt::format("write to '{}' at {} precedes its previous version", key, at.millis()));
  }
  auto record = std::make_shared<const KvRecord>(KvRecord{
      .table = std::string(table_name),
      .key = std::move(key),
      .value = std::move(value),
      .version = versions.size() + 1,
      .write_time = at,
      .lineage = std::move(lineage),
  });
  versions.push_back(record);

  auto pos = std::upper_bound(t.by_time.begin(), t.by_time.end(), record, [](const RecordPtr& a, const RecordPtr& b) {
    if (a->write_time != b->write_time) return a->write_time < b->write_time;
    if (a->key != b->key) return a->key < b->key;
    return a->version < b->version;
  });
  t.by_time.insert(pos, record);

  t.stream.push_back(ChangeEvent{.stream_seq = t.stream.size() + 1, .event_time = at, .record = record});
  const ChangeEvent event = t.stream.back();

  for (const auto& listener : t.listeners) listener(event);

  for (const auto& [id, sub] : t.subscriptions) {
    if (!record->key.starts_with(sub.key_prefix)) continue;
    ++deliveries_scheduled_;
    if (!delay_) continue;
    const Millis delay = delay_(at);
    engine_.schedule(at + delay,
                     {EventKind::kFeedbackArrival, static_cast<std::int64_t>(sub.subscriber),
                      static_cast<std::int64_t>(event.stream_seq)},
                     [this, sub = sub, event] { sink_(sub, event); });
  }
  return record;
}

std::optional<KvValue> KvStore::get(std::string_view table_name, std::string_view key, SimTime at) const {
  const Table& t = table(table_name);
  auto it = t.versions.find(std::string(key));
  if (it == t.versions.end()) return std::nullopt;
  const auto& versions = it->second;
  auto pos = std::upper_bound(versions.begin(), versions.end(), at,
                              [](SimTime when, const RecordPtr& r) { return when < r->write_time; });
  if (pos == versions.begin()) return std::nullopt;
  return (*std::prev(pos))->value;
}

template <typename Fn>
void KvStore::for_range(std::string_view table_name, Millis window_ms, SimTime at, Fn&& fn) const {
  if (window_ms <= 0) throw std::invalid_argument("scan window must be positive");
  const Table& t = table(table_name);
  const Millis lower = at.millis() - window_ms;  // exclusive
  auto first = std::upper_bound(t.by_time.begin(), t.by_time.end(), lower,
                                [](Millis when, const RecordPtr& r) { return when < r->write_time.millis(); });
  for (auto it = first; it != t.by_time.end() && (*it)->write_time <= at; ++it) fn(*it);
}

std::vector<RecordPtr> KvStore::scan_recent(std::string_view table_name, std::string_view key_prefix,
                                            Millis window_ms, SimTime at) const {
  std::vector<RecordPtr> out;
  for_range(table_name, window_ms, at, [&](const RecordPtr& r) {
    if (r->key.starts_with(key_prefix)) out.push_back(r);
  });
  return out;
}

void KvStore::visit_recent(std::string_view table_name, std::string_view key_prefix, Millis window_ms, SimTime at,
                           const std::function<void(const KvRecord&)>& visit) const {
  for_range(table_name, window_ms, at, [&](const RecordPtr& r) {
    if (r->key.starts_with(key_prefix)) visit(*r);
  });
}

Subscription KvStore::subscribe(std::string_view table_name, std::string key_prefix, std::uint64_t subscriber) {
  Table& t = table(table_name);
  Subscription sub{.sub_id = next_sub_id_++,
                   .table = std::string(table_name),
                   .key_prefix = std::move(key_prefix),
                   .subscriber = subscriber};
  t.subscriptions.emplace(sub.sub_id, sub);
  sub_tables_.emplace(sub.sub_id, sub.table);
  return sub;
}

bool KvStore::unsubscribe(std::uint64_t sub_id) {
  auto it = sub_tables_.find(sub_id);
  if (it == sub_tables_.end()) return false;
  table(it->second).subscriptions.erase(sub_id);
  sub_tables_.erase(it);
  return true;
}

void KvStore::add_change_listener(std::string_view table_name, ChangeListener listener) {
  table(table_name).listeners.push_back(std::move(listener));
}

void KvStore::set_delivery(DelaySampler delay, DeliverySink sink) {
  delay_ = std::move(delay);
  sink_ = std::move(sink);
}

const std::vector<ChangeEvent>& KvStore::stream(std::string_view table_name) const {
  return table(table_name).stream;
}

nlohmann::json KvStore::dump(std::string_view table_name) const {
  const Table& t = table(table_name);
  std::vector<const std::string*> keys;
  keys.reserve(t.versions.size());
  for (const auto& [k, _] : t.versions) keys.push_back(&k);
  std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });

  nlohmann::json out = nlohmann::json::object();
  for (const auto* k : keys) {
    const auto& latest = t.versions.at(*k).back();
    out[*k] = {{"value", to_json(latest->value)},
               {"version", latest->version},
               {"write_time", latest->write_time.millis()}};
  }
  return out;
}

nlohmann::json to_json(const Scalar& s) {
  return std::visit([](const auto& v) { return nlohmann::json(v); }, s);
}

nlohmann::json to_json(const KvValue& v) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, s] : v) out[k] = to_json(s);
  return out;
}

std::optional<double> get_number(const KvValue& v, std::string_view field) {
  auto it = v.find(field);
  if (it == v.end()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  return std::nullopt;
}

std::optional<std::int64_t> get_int(const KvValue& v, std::string_view field) {
  auto it = v.find(field);
  if (it == v.end()) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  return std::nullopt;
}

std::optional<std::string> get_string(const KvValue& v, std::string_view field) {
  auto it = v.find(field);
  if (it == v.end()) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return std::nullopt;
}

}  // namespace tcps::kv
