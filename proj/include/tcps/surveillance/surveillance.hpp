#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcps/kv/kvstore.hpp"
#include "tcps/runtime/runtime.hpp"

namespace tcps::surveillance {

/// Exact conversion: metres per second in one mile per hour.
inline constexpr double kMpsPerMph = 0.44704;

inline double mps_to_mph(double mps) { return mps / kMpsPerMph; }
inline double mph_to_mps(double mph) { return mph * kMpsPerMph; }
/// Reporting-edge rounding to 0.1.
double round_tenth(double value);

/// Unweighted mean of the speeds, in mph. Throws std::invalid_argument on
/// an empty list.
double mean_speed_mph(std::span<const double> speeds_mps);

struct FeedbackRecord {
  std::string segment_id;
  double avg_speed_mph = 0.0;
  std::size_t n_samples = 0;
  SimTime computed_at;
  std::vector<TxnId> lineage;  // txns of the batch that touched this segment
};

kv::KvValue to_value(const FeedbackRecord& record);
std::optional<FeedbackRecord> feedback_from_value(const kv::KvValue& value);

struct SurveillanceConfig {
  std::string trajectory_table = "vehicle_trajectory";
  std::string feedback_table = "feedback";
  Millis window_ms = 10'000;
};

struct HandleResult {
  std::vector<FeedbackRecord> feedback;  // ordered by segment id
  std::size_t malformed = 0;
};

/// Average speed for every segment touched by the batch, over trajectory
/// records written in (snapshot_at - window, snapshot_at]. Segments with no
/// in-window records yield nothing; malformed batch records are skipped and
/// counted.
HandleResult compute_feedback(std::span<const kv::ChangeEvent> batch, const kv::KvStore& store,
                              SimTime snapshot_at, SimTime computed_at, const SurveillanceConfig& config);

/// The traffic-surveillance function. Stateless apart from counters.
class SurveillanceApp {
 public:
  explicit SurveillanceApp(SurveillanceConfig config = {}) : config_(std::move(config)) {}

  /// Handler for the runtime: reads as of t_start, stamps feedback at t_end.
  runtime::Handler handler();

  const SurveillanceConfig& config() const { return config_; }
  std::size_t malformed_records() const { return malformed_; }
  std::size_t feedback_writes() const { return writes_; }

 private:
  SurveillanceConfig config_;
  std::size_t malformed_ = 0;
  std::size_t writes_ = 0;
};

}  // namespace tcps::surveillance
