#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcps/fleet/fleet.hpp"
#include "tcps/metrics/metrics.hpp"
#include "tcps/runtime/runtime.hpp"
#include "tcps/scenario/config.hpp"

namespace tcps::scenario {

inline constexpr const char* kFunctionName = "traffic-surveillance";

struct RunResult {
  ScenarioConfig config;
  std::vector<metrics::DelaySample> samples;  // completed transactions, in completion order
  std::optional<metrics::QosReport> report;    // absent when no transaction completed
  std::vector<runtime::InvocationRecord> invocations;
  std::vector<TransactionTrace> traces;
  runtime::ShardPlan plan;
  SimTime end_time;
  double utilization = 0.0;  // server-based mode; 0 otherwise
  fleet::FleetCounters fleet_counters;
  std::size_t malformed_records = 0;
  std::size_t feedback_writes = 0;
  std::uint64_t events_processed = 0;
  std::vector<std::string> trace_lines;        // export_traces only
  std::vector<fleet::FleetTraceRow> fleet_trace;  // export_traces only
  nlohmann::json kv_dump;                      // export_traces only

  /// t_invoke_start - t_stored for every transaction whose invocation started.
  std::vector<double> dispatch_waits() const;
  /// Same, restricted to transactions stored in [from, to].
  std::vector<double> dispatch_waits_stored_in(SimTime from, SimTime to) const;
};

/// Validates, wires fleet -> store -> runtime -> surveillance -> store ->
/// fleet on one engine, and runs to quiescence.
RunResult run_simulation(const ScenarioConfig& config);

/// Serialized probes: each of `n_vehicles` sends `samples_per_vehicle`
/// messages, the next one only after the previous feedback arrived.
std::vector<metrics::DelaySample> run_probe_protocol(ScenarioConfig config, std::size_t n_vehicles,
                                                     std::size_t samples_per_vehicle);

/// report.json contents: the QoS report, the per-bucket table and run counters.
nlohmann::json report_json(const RunResult& result);

/// Writes config.echo.json, report.json, samples.csv, cdf_*.csv and
/// invocations.csv (plus trace.tsv, fleet.csv and kv_dump.json when traces
/// are exported) into `dir`, creating it if needed.
void write_artifacts(const RunResult& result, const std::filesystem::path& dir);

}  // namespace tcps::scenario
