#include "tcps/fleet/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "tcps/surveillance/surveillance.hpp"

namespace tcps::fleet {
namespace {

int id_width(const RoadConfig& road) {
  return static_cast<int>(fmt::format("{}", std::max(0, road.n_segments - 1)).size());
}

}  // namespace

std::string segment_id(int index, const RoadConfig& road) {
  return fmt::format("seg-{:0{}}", index, id_width(road));
}

std::vector<RoadSegment> make_segments(const RoadConfig& road) {
  if (road.n_segments < 1 || !(road.length_m > 0.0)) throw std::invalid_argument("road needs a positive length and >= 1 segment");
  std::vector<RoadSegment> out;
  const double len = road.length_m / road.n_segments;
  for (int i = 0; i < road.n_segments; ++i) {
    out.push_back({segment_id(i, road), i * len, i + 1 == road.n_segments ? road.length_m : (i + 1) * len});
  }
  return out;
}

std::string segment_at(double position_m, const RoadConfig& road) {
  auto index = static_cast<int>(std::floor(position_m / road.length_m * road.n_segments));
  return segment_id(std::clamp(index, 0, road.n_segments - 1), road);
}

std::string trajectory_key(VehicleId vehicle, std::uint64_t seq) { return fmt::format("{}#{}", vehicle, seq); }

kv::KvValue to_value(const Bsm& b) {
  return {
      {"vehicle_id", static_cast<std::int64_t>(b.vehicle_id)},
      {"seq", static_cast<std::int64_t>(b.seq)},
      {"t_emit", b.t_emit.millis()},
      {"position_m", b.position_m},
      {"segment_id", b.segment_id},
      {"speed_mps", b.speed_mps},
  };
}

std::optional<Bsm> bsm_from_value(const kv::KvValue& v) {
  auto vehicle = kv::get_int(v, "vehicle_id");
  auto seq = kv::get_int(v, "seq");
  auto t = kv::get_int(v, "t_emit");
  auto pos = kv::get_number(v, "position_m");
  auto seg = kv::get_string(v, "segment_id");
  auto speed = kv::get_number(v, "speed_mps");
  if (!vehicle || !seq || !t || !pos || !seg || !speed || *vehicle < 0 || *seq < 0 || *t < 0) return std::nullopt;
  return Bsm{static_cast<VehicleId>(*vehicle), static_cast<std::uint64_t>(*seq), SimTime(*t), *pos, *seg, *speed};
}

VehicleState step_vehicle(VehicleState s, Millis dt_ms, const KinematicsConfig& k, RngStream& rng) {
  if (dt_ms <= 0) throw std::invalid_argument("step_vehicle needs dt_ms > 0");
  const double dt = static_cast<double>(dt_ms) / 1000.0;
  s.position_m = std::fmod(s.position_m + s.speed_mps * dt, k.road_length_m);
  if (s.position_m < 0.0) s.position_m += k.road_length_m;
  const double perturbed = s.speed_mps + k.speed_sigma_mps * std::sqrt(dt) * rng.standard_normal();
  s.speed_mps = std::clamp(perturbed, k.min_speed_fraction * k.speed_limit_mps, k.speed_limit_mps);
  return s;
}

Fleet::Fleet(Engine& engine, kv::KvStore& store, TransactionLog& txns, net::LatencyModel upload, net::DayClock clock,
             FleetConfig config)
    : engine_(engine),
      store_(store),
      txns_(txns),
      upload_(std::move(upload)),
      clock_(clock),
      config_(std::move(config)),
      kinematics_rng_(engine.rng_stream("kinematics")),
      upload_rng_(engine.rng_stream("upload")),
      phase_rng_(engine.rng_stream("phase")) {
  if (config_.n_vehicles > std::numeric_limits<VehicleId>::max()) throw std::invalid_argument("too many vehicles");
  config_.kinematics.road_length_m = config_.road.length_m;
  make_segments(config_.road);
  if (const auto* fr = std::get_if<FreeRunningEmission>(&config_.emission); fr && !(fr->hz > 0.0)) {
    throw std::invalid_argument("free-running emission rate must be positive");
  }
  if (std::holds_alternative<FreeRunningEmission>(config_.emission) && !config_.duration_ms) {
    throw std::invalid_argument("free-running emission needs a duration");
  }
  if (std::holds_alternative<ProbeEmission>(config_.emission) && !config_.samples_per_vehicle &&
      !config_.duration_ms) {
    throw std::invalid_argument("probe emission needs samples_per_vehicle or a duration");
  }

  const auto& kin = config_.kinematics;
  vehicles_.resize(config_.n_vehicles);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    auto& v = vehicles_[i];
    v.state.vehicle_id = static_cast<VehicleId>(i);
    v.state.position_m = config_.road.length_m * static_cast<double>(i) / static_cast<double>(vehicles_.size());
    v.state.speed_mps = kinematics_rng_.uniform(kin.min_speed_fraction * kin.speed_limit_mps, kin.speed_limit_mps);
  }
}

std::vector<VehicleId> Fleet::vehicle_ids() const {
  std::vector<VehicleId> ids;
  ids.reserve(vehicles_.size());
  for (const auto& v : vehicles_) ids.push_back(v.state.vehicle_id);
  return ids;
}

Fleet::Vehicle& Fleet::vehicle(VehicleId id) {
  if (id >= vehicles_.size()) throw std::out_of_range(fmt::format("unknown vehicle {}", id));
  return vehicles_[id];
}

const VehicleState& Fleet::state(VehicleId id) const {
  if (id >= vehicles_.size()) throw std::out_of_range(fmt::format("unknown vehicle {}", id));
  return vehicles_[id].state;
}

std::size_t Fleet::open_transactions() const {
  std::size_t n = 0;
  for (const auto& v : vehicles_) n += v.open.size();
  return n;
}

bool Fleet::may_emit(SimTime at) const { return !config_.duration_ms || at.millis() < *config_.duration_ms; }

void Fleet::start() {
  if (config_.samples_per_vehicle && *config_.samples_per_vehicle == 0) return;
  const double spread = std::visit(
      [](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, FreeRunningEmission>) return 1000.0 / e.hz;
        return 1000.0;
      },
      config_.emission);
  for (const auto& v : vehicles_) {
    const auto offset = static_cast<Millis>(std::floor(phase_rng_.uniform() * spread));
    const SimTime at = engine_.now() + offset;
    if (may_emit(at)) schedule_emission(v.state.vehicle_id, at);
  }
}

void Fleet::schedule_emission(VehicleId id, SimTime at) {
  const auto seq = static_cast<std::int64_t>(vehicles_[id].next_seq);
  engine_.schedule(at, {EventKind::kBsmEmit, static_cast<std::int64_t>(id), seq}, [this, id] {
    on_emission(id, engine_.now());
  });
}

void Fleet::on_emission(VehicleId id, SimTime at) {
  emit_bsm(id, at);
  if (const auto* fr = std::get_if<FreeRunningEmission>(&config_.emission)) {
    const SimTime next = at + std::max<Millis>(1, round_half_up(1000.0 / fr->hz));
    if (may_emit(next)) schedule_emission(id, next);
  }
}

void Fleet::retain_segment(Vehicle& v, const std::string& segment) {
  auto& ref = v.subs[segment];
  if (ref.sub_id == 0) ref.sub_id = store_.subscribe(config_.feedback_table, segment, v.state.vehicle_id).sub_id;
  ++ref.open;
}

void Fleet::release_segment(Vehicle& v, const std::string& segment) {
  auto it = v.subs.find(segment);
  if (it == v.subs.end()) return;
  if (it->second.open > 0) --it->second.open;
  if (it->second.open == 0 && segment != v.current_segment) {
    store_.unsubscribe(it->second.sub_id);
    v.subs.erase(it);
  }
}

Bsm Fleet::emit_bsm(VehicleId id, SimTime at) {
  Vehicle& v = vehicle(id);
  if (at > v.last_update) {
    v.state = step_vehicle(v.state, at - v.last_update, config_.kinematics, kinematics_rng_);
    v.last_update = at;
  }

  Bsm bsm{
      .vehicle_id = id,
      .seq = ++v.next_seq,
      .t_emit = at,
      .position_m = v.state.position_m,
      .segment_id = segment_at(v.state.position_m, config_.road),
      .speed_mps = v.state.speed_mps,
  };
  ++counters_.emitted;

  if (bsm.segment_id != v.current_segment) {
    const std::string previous = std::exchange(v.current_segment, bsm.segment_id);
    if (!previous.empty()) {
      auto it = v.subs.find(previous);
      if (it != v.subs.end() && it->second.open == 0) {
        store_.unsubscribe(it->second.sub_id);
        v.subs.erase(it);
      }
    }
  }
  retain_segment(v, bsm.segment_id);

  const TxnId txn = txns_.open(id, at);
  v.open.emplace(txn, bsm.segment_id);

  if (config_.record_trace) {
    std::optional<double> fb;
    if (v.state.last_feedback) fb = surveillance::round_tenth(v.state.last_feedback->avg_speed_mph);
    trace_.push_back({id, at, v.state.position_m, v.state.speed_mps, fb});
  }

  const Millis delay = net::sample(upload_, at, clock_, upload_rng_);
  engine_.schedule(at + delay, {EventKind::kKvWriteArrival, static_cast<std::int64_t>(id), static_cast<std::int64_t>(txn)},
                   [this, txn, key = trajectory_key(id, bsm.seq), value = to_value(bsm)]() mutable {
                     const SimTime now = engine_.now();
                     txns_.mark_stored(txn, now);
                     store_.put(config_.trajectory_table, std::move(key), std::move(value), now, {txn});
                   });
  return bsm;
}

void Fleet::receive_feedback(VehicleId id, const std::string& segment, double avg_speed_mph, SimTime at,
                             std::span<const TxnId> lineage, std::optional<std::uint64_t> stream_seq) {
  if (id >= vehicles_.size()) {
    ++counters_.dropped_unknown_vehicle;
    return;
  }
  Vehicle& v = vehicles_[id];
  if (stream_seq && !v.seen_stream_seqs.insert(*stream_seq).second) {
    ++counters_.duplicate_deliveries;
    return;
  }
  ++counters_.feedback_received;
  v.state.last_feedback = ReceivedFeedback{segment, avg_speed_mph, at};

  for (TxnId txn : lineage) {
    auto it = v.open.find(txn);
    if (it == v.open.end()) continue;
    txns_.mark_feedback(txn, at);
    samples_.push_back(metrics::make_sample(txns_.at(txn), clock_));
    const std::string msg_segment = it->second;
    v.open.erase(it);
    release_segment(v, msg_segment);
    ++v.completed;

    if (const auto* probe = std::get_if<ProbeEmission>(&config_.emission)) {
      const bool more = !config_.samples_per_vehicle || v.completed < *config_.samples_per_vehicle;
      const SimTime next = at + probe->gap_ms;
      if (more && may_emit(next)) schedule_emission(id, next);
    }
  }
}

void Fleet::receive_delivery(std::uint64_t subscriber, const kv::ChangeEvent& event, SimTime at) {
  if (subscriber >= vehicles_.size()) {
    ++counters_.dropped_unknown_vehicle;
    return;
  }
  auto fb = surveillance::feedback_from_value(event.new_value());
  if (!fb) {
    ++counters_.malformed_feedback;
    return;
  }
  receive_feedback(static_cast<VehicleId>(subscriber), fb->segment_id, fb->avg_speed_mph, at,
                   event.record->lineage, event.stream_seq);
}

void write_fleet_trace_csv(std::ostream& out, std::span<const FleetTraceRow> rows) {
  out << "vehicle,t,position_m,speed_mps,last_feedback_mph\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.3f},{:.3f},", r.vehicle_id, r.t.millis(), r.position_m, r.speed_mps);
    if (r.last_feedback_mph) out << fmt::format("{:.1f}", *r.last_feedback_mph);
    out << '\n';
  }
}

}  // namespace tcps::fleet
