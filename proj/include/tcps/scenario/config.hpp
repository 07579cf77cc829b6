#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcps/net/latency_model.hpp"
#include "tcps/runtime/runtime.hpp"

namespace tcps::scenario {

/// A configuration problem, reported with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct LatencyTarget {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

struct LatencyTargets {
  LatencyTarget upload{85.0, 136.0};
  LatencyTarget download{84.0, 139.0};
  LatencyTarget process{41.0, 74.0};
};

/// Field-run targets: mean / p95 of upload, download and processing.
LatencyTargets table1_targets();
/// The table1 shapes rescaled so that the peak-bucket (x1.15) p95 of upload
/// and download sits at 100 ms; processing unchanged.
LatencyTargets fig8_targets();
LatencyTargets targets_for_profile(const std::string& profile);

/// Either a named profile ("flat", "default") or explicit multipliers.
using DiurnalSelection = std::variant<std::string, std::array<double, net::kDayBuckets>>;

enum class Direction { kUpload, kDownload, kProcess };
net::DiurnalProfile resolve_diurnal(const DiurnalSelection& selection, Direction direction);

enum class EmissionKind { kProbe, kFreeRunning };

struct EmissionConfig {
  EmissionKind kind = EmissionKind::kProbe;
  Millis probe_gap_ms = 0;
  double hz = 10.0;
};

struct FunctionConfig {
  std::optional<std::size_t> capacity = 1;  // nullopt: unbounded (one shard)
  int memory_mb = 1024;
  Millis cold_start_ms = 0;
  Millis keep_alive_ms = 300'000;
  double per_record_ms = 0.0;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 1;
  runtime::ExecutionMode mode = runtime::ExecutionMode::kServerless;
  std::size_t n_vehicles = 3;
  std::optional<std::size_t> samples_per_vehicle = 1000;
  std::optional<Millis> duration_ms;
  EmissionConfig emission;
  double road_length_m = 5000.0;
  int n_segments = 10;
  double speed_limit_mph = 35.0;
  double speed_sigma_mps = 0.5;
  Millis start_time_of_day_ms = 0;
  std::string latency_profile = "table1";
  LatencyTargets latency = table1_targets();
  DiurnalSelection diurnal_upload = std::string("flat");
  DiurnalSelection diurnal_download = std::string("flat");
  DiurnalSelection diurnal_process = std::string("flat");
  FunctionConfig function;
  std::size_t worker_count = 1;
  double qos_limit_ms = 1000.0;
  Millis window_ms = 10'000;
  bool per_vehicle_breakdown = false;
  bool export_traces = false;
  std::string output_dir = "out";

  /// Capacity after resolving "unbounded" to the fleet size.
  std::size_t effective_capacity() const;
};

/// Throws ConfigError (or net::CalibrationError for infeasible targets).
void validate(const ScenarioConfig& config);

/// Applies the keys present in `j` on top of `base`. Unknown keys and
/// mistyped values throw ConfigError.
ScenarioConfig apply_json(ScenarioConfig base, const nlohmann::json& j);

/// The effective configuration. output_dir is omitted so that runs written
/// to different directories echo identically.
nlohmann::json to_json(const ScenarioConfig& config);

struct BuiltinScenario {
  std::string name;
  std::string description;
  ScenarioConfig config;
};

std::vector<BuiltinScenario> builtin_scenarios();
/// Throws ConfigError for an unknown name.
ScenarioConfig builtin(const std::string& name);

}  // namespace tcps::scenario
