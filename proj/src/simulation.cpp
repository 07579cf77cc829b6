#include "tcps/scenario/simulation.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>

#include "tcps/surveillance/surveillance.hpp"

namespace tcps::scenario {
namespace {

using nlohmann::json;

net::LatencyModel model_for(const char* label, const LatencyTarget& t, const DiurnalSelection& d, Direction dir) {
  return net::LatencyModel::calibrated(label, t.mean_ms, t.p95_ms, resolve_diurnal(d, dir));
}

fleet::FleetConfig fleet_config(const ScenarioConfig& c) {
  fleet::FleetConfig f;
  f.n_vehicles = c.n_vehicles;
  f.samples_per_vehicle = c.samples_per_vehicle;
  f.duration_ms = c.duration_ms;
  if (c.emission.kind == EmissionKind::kProbe) {
    f.emission = fleet::ProbeEmission{c.emission.probe_gap_ms};
  } else {
    f.emission = fleet::FreeRunningEmission{c.emission.hz};
  }
  f.road = {c.road_length_m, c.n_segments};
  f.kinematics.road_length_m = c.road_length_m;
  f.kinematics.speed_limit_mps = surveillance::mph_to_mps(c.speed_limit_mph);
  f.kinematics.speed_sigma_mps = c.speed_sigma_mps;
  f.record_trace = c.export_traces;
  return f;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << content;
}

template <typename Fn>
void write_stream(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  fn(out);
}

}  // namespace

std::vector<double> RunResult::dispatch_waits() const {
  std::vector<double> out;
  for (const auto& t : traces) {
    if (t.t_stored && t.t_invoke_start) out.push_back(static_cast<double>(*t.t_invoke_start - *t.t_stored));
  }
  return out;
}

std::vector<double> RunResult::dispatch_waits_stored_in(SimTime from, SimTime to) const {
  std::vector<double> out;
  for (const auto& t : traces) {
    if (t.t_stored && t.t_invoke_start && *t.t_stored >= from && *t.t_stored <= to) {
      out.push_back(static_cast<double>(*t.t_invoke_start - *t.t_stored));
    }
  }
  return out;
}

RunResult run_simulation(const ScenarioConfig& config) {
  validate(config);
  const net::DayClock clock{config.start_time_of_day_ms};
  const auto upload = model_for("upload", config.latency.upload, config.diurnal_upload, Direction::kUpload);
  const auto download = model_for("download", config.latency.download, config.diurnal_download, Direction::kDownload);
  const auto process = model_for("process", config.latency.process, config.diurnal_process, Direction::kProcess);

  auto engine = std::make_unique<Engine>(config.seed);
  kv::KvStore store(*engine);
  TransactionLog txns;
  surveillance::SurveillanceApp app({.window_ms = config.window_ms});
  store.create_table(app.config().trajectory_table);
  store.create_table(app.config().feedback_table);

  RunResult result;
  result.config = config;
  if (config.export_traces) {
    engine->set_trace_sink([&](const ScheduledEvent& e) { result.trace_lines.push_back(format_trace_line(e)); });
  }

  runtime::Runtime rt(*engine, store, config.mode, config.worker_count, clock);
  rt.register_function(
      {
          .name = kFunctionName,
          .capacity = config.effective_capacity(),
          .memory_mb = config.function.memory_mb,
          .cold_start_ms = config.function.cold_start_ms,
          .keep_alive_ms = config.function.keep_alive_ms,
          .proc_model = process,
          .per_record_ms = config.function.per_record_ms,
          .handler = app.handler(),
      },
      app.config().trajectory_table);
  rt.set_observer({
      .on_start = [&](const runtime::InvocationRecord& r) {
        for (TxnId id : r.trigger_txns) txns.mark_invoke_start(id, r.t_start);
      },
      .on_end = [&](const runtime::InvocationRecord& r) {
        for (TxnId id : r.trigger_txns) txns.mark_invoke_end(id, r.t_end);
      },
  });

  auto ff = fleet_config(config);
  ff.trajectory_table = app.config().trajectory_table;
  ff.feedback_table = app.config().feedback_table;
  fleet::Fleet fleet(*engine, store, txns, upload, clock, std::move(ff));
  const auto ids = fleet.vehicle_ids();
  rt.set_fleet(ids);

  auto download_rng = std::make_shared<RngStream>(engine->rng_stream("download"));
  store.set_delivery(
      [&, download_rng](SimTime at) { return net::sample(download, at, clock, *download_rng); },
      [&](const kv::Subscription& sub, const kv::ChangeEvent& event) {
        fleet.receive_delivery(sub.subscriber, event, engine->now());
      });

  fleet.start();
  engine->run_to_quiescence();

  result.samples = fleet.samples();
  if (!result.samples.empty()) result.report = metrics::build_report(result.samples, config.qos_limit_ms);
  result.invocations = rt.invocations();
  result.traces = txns.traces();
  result.plan = rt.plan(kFunctionName);
  result.end_time = engine->now();
  if (config.mode == runtime::ExecutionMode::kServerBased && result.end_time.millis() > 0) {
    result.utilization = runtime::utilization(rt.pool(), result.end_time.millis());
  }
  result.fleet_counters = fleet.counters();
  result.malformed_records = app.malformed_records();
  result.feedback_writes = app.feedback_writes();
  result.events_processed = engine->processed();
  if (config.export_traces) {
    result.fleet_trace = fleet.trace_rows();
    result.kv_dump = {{app.config().trajectory_table, store.dump(app.config().trajectory_table)},
                      {app.config().feedback_table, store.dump(app.config().feedback_table)}};
  }
  return result;
}

std::vector<metrics::DelaySample> run_probe_protocol(ScenarioConfig config, std::size_t n_vehicles,
                                                     std::size_t samples_per_vehicle) {
  config.n_vehicles = n_vehicles;
  config.samples_per_vehicle = samples_per_vehicle;
  config.duration_ms = std::nullopt;
  config.emission.kind = EmissionKind::kProbe;
  return run_simulation(config).samples;
}

json report_json(const RunResult& r) {
  json j;
  j["scenario"] = r.config.name;
  j["seed"] = r.config.seed;
  j["completed"] = r.report.has_value();
  j["qos"] = r.report ? metrics::to_json(*r.report) : json(nullptr);
  j["verdict"] = r.report && r.report->pass ? "pass" : "fail";
  j["diurnal"] = metrics::to_json(metrics::diurnal_summary(r.samples));

  std::size_t cold = 0;
  for (const auto& inv : r.invocations) cold += inv.cold ? 1 : 0;
  j["counters"] = {
      {"transactions_opened", r.traces.size()},
      {"transactions_closed", r.samples.size()},
      {"messages_emitted", r.fleet_counters.emitted},
      {"feedback_received", r.fleet_counters.feedback_received},
      {"duplicate_deliveries", r.fleet_counters.duplicate_deliveries},
      {"malformed_records", r.malformed_records},
      {"feedback_writes", r.feedback_writes},
      {"invocations", r.invocations.size()},
      {"cold_starts", cold},
      {"shard_count", r.plan.shard_count},
      {"events_processed", r.events_processed},
      {"end_time_ms", r.end_time.millis()},
  };
  if (r.config.mode == runtime::ExecutionMode::kServerBased) j["counters"]["utilization"] = r.utilization;

  const auto waits = r.dispatch_waits();
  j["dispatch_wait"] = waits.empty() ? json(nullptr) : metrics::to_json(metrics::summarize(waits));

  if (r.config.per_vehicle_breakdown) {
    std::map<VehicleId, std::vector<metrics::DelaySample>> by_vehicle;
    for (const auto& s : r.samples) by_vehicle[s.vehicle_id].push_back(s);
    json per = json::object();
    for (const auto& [v, samples] : by_vehicle) {
      per[std::to_string(v)] = metrics::to_json(metrics::build_report(samples, r.config.qos_limit_ms));
    }
    j["per_vehicle"] = per;
  }
  return j;
}

void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "config.echo.json", to_json(r.config).dump(2) + "\n");
  write_file(dir / "report.json", report_json(r).dump(2) + "\n");
  write_stream(dir / "samples.csv", [&](std::ostream& o) { metrics::write_samples_csv(o, r.samples); });

  const std::pair<const char*, metrics::Component> cdfs[] = {
      {"cdf_upload.csv", metrics::Component::kUpload},
      {"cdf_download.csv", metrics::Component::kDownload},
      {"cdf_process.csv", metrics::Component::kProcess},
      {"cdf_total.csv", metrics::Component::kTotal},
  };
  for (const auto& [name, component] : cdfs) {
    const auto points = metrics::cdf_points(metrics::column(r.samples, component));
    write_stream(dir / name, [&](std::ostream& o) { metrics::write_cdf_csv(o, points); });
  }
  write_stream(dir / "invocations.csv", [&](std::ostream& o) { runtime::write_invocations_csv(o, r.invocations); });

  if (r.config.export_traces) {
    write_stream(dir / "trace.tsv", [&](std::ostream& o) {
      for (const auto& line : r.trace_lines) o << line << '\n';
    });
    write_stream(dir / "fleet.csv", [&](std::ostream& o) { fleet::write_fleet_trace_csv(o, r.fleet_trace); });
    write_file(dir / "kv_dump.json", r.kv_dump.dump(2) + "\n");
  }
}

}  // namespace tcps::scenario
