#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "tcps/kv/kvstore.hpp"
#include "tcps/metrics/metrics.hpp"
#include "tcps/net/latency_model.hpp"
#include "tcps/sim/engine.hpp"
#include "tcps/sim/transaction.hpp"

namespace tcps::fleet {

struct RoadSegment {
  std::string segment_id;
  double start_m = 0.0;
  double end_m = 0.0;
};

struct RoadConfig {
  double length_m = 5000.0;
  int n_segments = 10;
};

/// Equal-length segments partitioning [0, length). Ids are zero-padded to a
/// common width so no id is a prefix of another.
std::vector<RoadSegment> make_segments(const RoadConfig& road);
std::string segment_id(int index, const RoadConfig& road);
std::string segment_at(double position_m, const RoadConfig& road);

struct Bsm {
  VehicleId vehicle_id = 0;
  std::uint64_t seq = 0;
  SimTime t_emit;
  double position_m = 0.0;
  std::string segment_id;
  double speed_mps = 0.0;
};

/// "vehicleId#seq"
std::string trajectory_key(VehicleId vehicle, std::uint64_t seq);
kv::KvValue to_value(const Bsm& bsm);
std::optional<Bsm> bsm_from_value(const kv::KvValue& value);

struct ReceivedFeedback {
  std::string segment_id;
  double avg_speed_mph = 0.0;
  SimTime t_received;
};

struct VehicleState {
  VehicleId vehicle_id = 0;
  double position_m = 0.0;
  double speed_mps = 0.0;
  std::optional<ReceivedFeedback> last_feedback;
};

struct KinematicsConfig {
  double road_length_m = 5000.0;
  double speed_limit_mps = 35.0 * 0.44704;
  double min_speed_fraction = 0.6;
  /// Random-walk intensity in m/s per sqrt(second).
  double speed_sigma_mps = 0.5;
};

/// Advances position by speed * dt (wrapping around the loop), then applies
/// a Gaussian speed perturbation clipped to [min_fraction * limit, limit].
VehicleState step_vehicle(VehicleState state, Millis dt_ms, const KinematicsConfig& config, RngStream& rng);

/// Serialized round trips: a vehicle emits its next message `gap_ms` after
/// the feedback for the previous one arrives.
struct ProbeEmission {
  Millis gap_ms = 0;
};
/// Periodic emission regardless of outstanding feedback.
struct FreeRunningEmission {
  double hz = 10.0;
};
using Emission = std::variant<ProbeEmission, FreeRunningEmission>;

struct FleetConfig {
  std::size_t n_vehicles = 3;
  std::optional<std::size_t> samples_per_vehicle;  // probe mode
  std::optional<Millis> duration_ms;               // no emissions at or after this time
  Emission emission = ProbeEmission{};
  RoadConfig road;
  KinematicsConfig kinematics;
  std::string trajectory_table = "vehicle_trajectory";
  std::string feedback_table = "feedback";
  bool record_trace = false;
};

struct FleetTraceRow {
  VehicleId vehicle_id = 0;
  SimTime t;
  double position_m = 0.0;
  double speed_mps = 0.0;
  std::optional<double> last_feedback_mph;
};

struct FleetCounters {
  std::uint64_t emitted = 0;
  std::uint64_t feedback_received = 0;
  std::uint64_t duplicate_deliveries = 0;
  std::uint64_t dropped_unknown_vehicle = 0;
  std::uint64_t malformed_feedback = 0;
};

/// Simulated connected vehicles. Each vehicle subscribes to the feedback key
/// of every segment it has open messages on (plus its current segment), and
/// closes a transaction when a delivery's lineage names it.
class Fleet {
 public:
  Fleet(Engine& engine, kv::KvStore& store, TransactionLog& txns, net::LatencyModel upload, net::DayClock clock,
        FleetConfig config);
  Fleet(const Fleet&) = delete;
  Fleet& operator=(const Fleet&) = delete;

  std::vector<VehicleId> vehicle_ids() const;
  const FleetConfig& config() const { return config_; }

  /// Schedules the first emission of every vehicle.
  void start();

  /// Builds a BSM from the vehicle's state at `at`, opens its transaction and
  /// schedules the trajectory write after a sampled upload delay.
  Bsm emit_bsm(VehicleId vehicle, SimTime at);

  void receive_feedback(VehicleId vehicle, const std::string& segment_id, double avg_speed_mph, SimTime at,
                        std::span<const TxnId> lineage = {}, std::optional<std::uint64_t> stream_seq = {});
  /// Subscription sink entry point.
  void receive_delivery(std::uint64_t subscriber, const kv::ChangeEvent& event, SimTime at);

  const VehicleState& state(VehicleId vehicle) const;
  const std::vector<metrics::DelaySample>& samples() const { return samples_; }
  const FleetCounters& counters() const { return counters_; }
  const std::vector<FleetTraceRow>& trace_rows() const { return trace_; }
  std::size_t open_transactions() const;

 private:
  struct SubRef {
    std::uint64_t sub_id = 0;
    std::size_t open = 0;
  };
  struct Vehicle {
    VehicleState state;
    SimTime last_update;
    std::uint64_t next_seq = 0;
    std::string current_segment;
    std::map<std::string, SubRef> subs;
    std::map<TxnId, std::string> open;  // txn -> segment of its message
    std::unordered_set<std::uint64_t> seen_stream_seqs;
    std::size_t completed = 0;
  };

  Vehicle& vehicle(VehicleId id);
  void retain_segment(Vehicle& v, const std::string& segment);
  void release_segment(Vehicle& v, const std::string& segment);
  void schedule_emission(VehicleId id, SimTime at);
  void on_emission(VehicleId id, SimTime at);
  bool may_emit(SimTime at) const;

  Engine& engine_;
  kv::KvStore& store_;
  TransactionLog& txns_;
  net::LatencyModel upload_;
  net::DayClock clock_;
  FleetConfig config_;
  RngStream kinematics_rng_;
  RngStream upload_rng_;
  RngStream phase_rng_;
  std::vector<Vehicle> vehicles_;
  std::vector<metrics::DelaySample> samples_;
  std::vector<FleetTraceRow> trace_;
  FleetCounters counters_;
};

void write_fleet_trace_csv(std::ostream& out, std::span<const FleetTraceRow> rows);

}  // namespace tcps::fleet
