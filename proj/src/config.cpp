#include "tcps/scenario/config.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace tcps::scenario {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.contains(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

double get_double(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

std::int64_t get_i64(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  return j.get<std::int64_t>();
}

std::size_t get_count(const json& j, const std::string& field) {
  const auto v = get_i64(j, field);
  if (v < 0) throw ConfigError(field, "must be >= 0");
  return static_cast<std::size_t>(v);
}

bool get_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw ConfigError(field, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

LatencyTarget parse_target(const json& j, const std::string& path, LatencyTarget t) {
  check_keys(j, path, {"mean_ms", "p95_ms"});
  if (j.contains("mean_ms")) t.mean_ms = get_double(j["mean_ms"], join(path, "mean_ms"));
  if (j.contains("p95_ms")) t.p95_ms = get_double(j["p95_ms"], join(path, "p95_ms"));
  return t;
}

DiurnalSelection parse_diurnal(const json& j, const std::string& field) {
  if (j.is_string()) {
    auto name = j.get<std::string>();
    if (name != "flat" && name != "default") throw ConfigError(field, "expected \"flat\", \"default\" or 8 numbers");
    return name;
  }
  if (!j.is_array() || j.size() != net::kDayBuckets) throw ConfigError(field, "expected \"flat\", \"default\" or 8 numbers");
  std::array<double, net::kDayBuckets> m{};
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = get_double(j[i], fmt::format("{}[{}]", field, i));
  return m;
}

json diurnal_json(const DiurnalSelection& s) {
  return std::visit([](const auto& v) { return json(v); }, s);
}

json target_json(const LatencyTarget& t) { return {{"mean_ms", t.mean_ms}, {"p95_ms", t.p95_ms}}; }

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

void validate_target(const LatencyTarget& t, const std::string& field) {
  try {
    net::calibrate(t.mean_ms, t.p95_ms);
  } catch (const net::CalibrationError& e) {
    throw net::CalibrationError(fmt::format("{} (mean_ms={}, p95_ms={}): {}", field, t.mean_ms, t.p95_ms, e.what()));
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& field, const std::string& message)
    : std::invalid_argument(fmt::format("{}: {}", field, message)), field_(field) {}

LatencyTargets table1_targets() { return {}; }

LatencyTargets fig8_targets() {
  constexpr double kPeakP95 = 100.0;
  constexpr double kPeakMultiplier = 1.15;
  const LatencyTargets t1 = table1_targets();
  const double p95 = kPeakP95 / kPeakMultiplier;
  LatencyTargets out = t1;
  out.upload = {t1.upload.mean_ms * p95 / t1.upload.p95_ms, p95};
  out.download = {t1.download.mean_ms * p95 / t1.download.p95_ms, p95};
  return out;
}

LatencyTargets targets_for_profile(const std::string& profile) {
  if (profile == "table1") return table1_targets();
  if (profile == "fig8") return fig8_targets();
  throw ConfigError("latency_profile", fmt::format("unknown profile '{}' (expected table1 or fig8)", profile));
}

net::DiurnalProfile resolve_diurnal(const DiurnalSelection& selection, Direction direction) {
  if (const auto* arr = std::get_if<std::array<double, net::kDayBuckets>>(&selection)) {
    net::DiurnalProfile p{*arr};
    net::validate(p);
    return p;
  }
  const auto& name = std::get<std::string>(selection);
  if (name == "flat") return net::DiurnalProfile::uniform();
  if (name == "default") {
    switch (direction) {
      case Direction::kUpload: return net::DiurnalProfile::upload_default();
      case Direction::kDownload: return net::DiurnalProfile::download_default();
      case Direction::kProcess: return net::DiurnalProfile::uniform();
    }
  }
  throw ConfigError("diurnal", fmt::format("unknown diurnal profile '{}'", name));
}

std::size_t ScenarioConfig::effective_capacity() const {
  return function.capacity ? *function.capacity : std::max<std::size_t>(1, n_vehicles);
}

void validate(const ScenarioConfig& c) {
  if (c.function.capacity && *c.function.capacity < 1) throw ConfigError("function.capacity", "must be >= 1");
  if (c.function.memory_mb <= 0 || c.function.memory_mb > runtime::kMaxMemoryMb) {
    throw ConfigError("function.memory_mb", fmt::format("must be in (0, {}]", runtime::kMaxMemoryMb));
  }
  if (c.function.cold_start_ms < 0) throw ConfigError("function.cold_start_ms", "must be >= 0");
  if (c.function.keep_alive_ms < 0) throw ConfigError("function.keep_alive_ms", "must be >= 0");
  if (c.function.per_record_ms < 0) throw ConfigError("function.per_record_ms", "must be >= 0");
  if (c.worker_count < 1) throw ConfigError("worker_count", "must be >= 1");
  if (!(c.qos_limit_ms > 0)) throw ConfigError("qos_limit_ms", "must be > 0");
  if (c.window_ms <= 0) throw ConfigError("window_ms", "must be > 0");
  if (!(c.road_length_m > 0)) throw ConfigError("road_length_m", "must be > 0");
  if (c.n_segments < 1) throw ConfigError("n_segments", "must be >= 1");
  if (!(c.speed_limit_mph > 0)) throw ConfigError("speed_limit_mph", "must be > 0");
  if (c.speed_sigma_mps < 0) throw ConfigError("speed_sigma_mps", "must be >= 0");
  if (c.start_time_of_day_ms < 0 || c.start_time_of_day_ms >= kMillisPerDay) {
    throw ConfigError("start_time_of_day_ms", "must be within one day");
  }
  if (c.duration_ms && *c.duration_ms < 0) throw ConfigError("duration_ms", "must be >= 0");
  if (c.emission.probe_gap_ms < 0) throw ConfigError("emission.probe_gap_ms", "must be >= 0");
  if (c.emission.kind == EmissionKind::kFreeRunning) {
    if (!(c.emission.hz > 0)) throw ConfigError("emission.hz", "must be > 0");
    if (!c.duration_ms) throw ConfigError("duration_ms", "free-running emission needs a duration");
  } else if (!c.samples_per_vehicle && !c.duration_ms) {
    throw ConfigError("samples_per_vehicle", "probe emission needs samples_per_vehicle or duration_ms");
  }
  if (c.samples_per_vehicle && *c.samples_per_vehicle < 1 && c.emission.kind == EmissionKind::kProbe) {
    throw ConfigError("samples_per_vehicle", "must be >= 1");
  }
  resolve_diurnal(c.diurnal_upload, Direction::kUpload);
  resolve_diurnal(c.diurnal_download, Direction::kDownload);
  resolve_diurnal(c.diurnal_process, Direction::kProcess);
  validate_target(c.latency.upload, "latency.upload");
  validate_target(c.latency.download, "latency.download");
  validate_target(c.latency.process, "latency.process");
}

ScenarioConfig apply_json(ScenarioConfig c, const json& j) {
  check_keys(j, "",
             {"name", "seed", "mode", "n_vehicles", "samples_per_vehicle", "duration_ms", "emission", "road_length_m",
              "n_segments", "speed_limit_mph", "speed_sigma_mps", "start_time_of_day_ms", "latency_profile", "latency",
              "diurnal", "function", "worker_count", "qos_limit_ms", "window_ms", "per_vehicle_breakdown",
              "export_traces", "output_dir"});

  if (j.contains("name")) c.name = get_string(j["name"], "name");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("mode")) {
    const auto mode = get_string(j["mode"], "mode");
    if (mode == "serverless") c.mode = runtime::ExecutionMode::kServerless;
    else if (mode == "server_based") c.mode = runtime::ExecutionMode::kServerBased;
    else throw ConfigError("mode", "expected \"serverless\" or \"server_based\"");
  }
  if (j.contains("n_vehicles")) c.n_vehicles = get_count(j["n_vehicles"], "n_vehicles");
  if (j.contains("samples_per_vehicle")) {
    const auto& v = j["samples_per_vehicle"];
    c.samples_per_vehicle = v.is_null() ? std::nullopt : std::optional(get_count(v, "samples_per_vehicle"));
  }
  if (j.contains("duration_ms")) {
    const auto& v = j["duration_ms"];
    c.duration_ms = v.is_null() ? std::nullopt : std::optional<Millis>(get_i64(v, "duration_ms"));
  }
  if (j.contains("emission")) {
    const auto& e = j["emission"];
    check_keys(e, "emission", {"kind", "probe_gap_ms", "hz"});
    if (e.contains("kind")) {
      const auto kind = get_string(e["kind"], "emission.kind");
      if (kind == "probe") c.emission.kind = EmissionKind::kProbe;
      else if (kind == "free_running") c.emission.kind = EmissionKind::kFreeRunning;
      else throw ConfigError("emission.kind", "expected \"probe\" or \"free_running\"");
    }
    if (e.contains("probe_gap_ms")) c.emission.probe_gap_ms = get_i64(e["probe_gap_ms"], "emission.probe_gap_ms");
    if (e.contains("hz")) c.emission.hz = get_double(e["hz"], "emission.hz");
  }
  if (j.contains("road_length_m")) c.road_length_m = get_double(j["road_length_m"], "road_length_m");
  if (j.contains("n_segments")) c.n_segments = static_cast<int>(get_i64(j["n_segments"], "n_segments"));
  if (j.contains("speed_limit_mph")) c.speed_limit_mph = get_double(j["speed_limit_mph"], "speed_limit_mph");
  if (j.contains("speed_sigma_mps")) c.speed_sigma_mps = get_double(j["speed_sigma_mps"], "speed_sigma_mps");
  if (j.contains("start_time_of_day_ms")) {
    c.start_time_of_day_ms = get_i64(j["start_time_of_day_ms"], "start_time_of_day_ms");
  }
  if (j.contains("latency_profile")) {
    c.latency_profile = get_string(j["latency_profile"], "latency_profile");
    c.latency = targets_for_profile(c.latency_profile);
  }
  if (j.contains("latency")) {
    const auto& l = j["latency"];
    check_keys(l, "latency", {"upload", "download", "process"});
    if (l.contains("upload")) c.latency.upload = parse_target(l["upload"], "latency.upload", c.latency.upload);
    if (l.contains("download")) c.latency.download = parse_target(l["download"], "latency.download", c.latency.download);
    if (l.contains("process")) c.latency.process = parse_target(l["process"], "latency.process", c.latency.process);
  }
  if (j.contains("diurnal")) {
    const auto& d = j["diurnal"];
    check_keys(d, "diurnal", {"upload", "download", "process"});
    if (d.contains("upload")) c.diurnal_upload = parse_diurnal(d["upload"], "diurnal.upload");
    if (d.contains("download")) c.diurnal_download = parse_diurnal(d["download"], "diurnal.download");
    if (d.contains("process")) c.diurnal_process = parse_diurnal(d["process"], "diurnal.process");
  }
  if (j.contains("function")) {
    const auto& f = j["function"];
    check_keys(f, "function", {"capacity", "memory_mb", "cold_start_ms", "keep_alive_ms", "per_record_ms"});
    if (f.contains("capacity")) {
      const auto& cap = f["capacity"];
      if (cap.is_string() && cap.get<std::string>() == "unbounded") c.function.capacity = std::nullopt;
      else c.function.capacity = get_count(cap, "function.capacity");
    }
    if (f.contains("memory_mb")) c.function.memory_mb = static_cast<int>(get_i64(f["memory_mb"], "function.memory_mb"));
    if (f.contains("cold_start_ms")) c.function.cold_start_ms = get_i64(f["cold_start_ms"], "function.cold_start_ms");
    if (f.contains("keep_alive_ms")) c.function.keep_alive_ms = get_i64(f["keep_alive_ms"], "function.keep_alive_ms");
    if (f.contains("per_record_ms")) c.function.per_record_ms = get_double(f["per_record_ms"], "function.per_record_ms");
  }
  if (j.contains("worker_count")) c.worker_count = get_count(j["worker_count"], "worker_count");
  if (j.contains("qos_limit_ms")) c.qos_limit_ms = get_double(j["qos_limit_ms"], "qos_limit_ms");
  if (j.contains("window_ms")) c.window_ms = get_i64(j["window_ms"], "window_ms");
  if (j.contains("per_vehicle_breakdown")) {
    c.per_vehicle_breakdown = get_bool(j["per_vehicle_breakdown"], "per_vehicle_breakdown");
  }
  if (j.contains("export_traces")) c.export_traces = get_bool(j["export_traces"], "export_traces");
  if (j.contains("output_dir")) c.output_dir = get_string(j["output_dir"], "output_dir");
  return c;
}

json to_json(const ScenarioConfig& c) {
  json emission = {{"kind", c.emission.kind == EmissionKind::kProbe ? "probe" : "free_running"},
                   {"probe_gap_ms", c.emission.probe_gap_ms},
                   {"hz", c.emission.hz}};
  json function = {{"capacity", c.function.capacity ? json(*c.function.capacity) : json("unbounded")},
                   {"memory_mb", c.function.memory_mb},
                   {"cold_start_ms", c.function.cold_start_ms},
                   {"keep_alive_ms", c.function.keep_alive_ms},
                   {"per_record_ms", c.function.per_record_ms}};
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"mode", c.mode == runtime::ExecutionMode::kServerless ? "serverless" : "server_based"},
      {"n_vehicles", c.n_vehicles},
      {"samples_per_vehicle", optional_json(c.samples_per_vehicle)},
      {"duration_ms", optional_json(c.duration_ms)},
      {"emission", emission},
      {"road_length_m", c.road_length_m},
      {"n_segments", c.n_segments},
      {"speed_limit_mph", c.speed_limit_mph},
      {"speed_sigma_mps", c.speed_sigma_mps},
      {"start_time_of_day_ms", c.start_time_of_day_ms},
      {"latency_profile", c.latency_profile},
      {"latency",
       {{"upload", target_json(c.latency.upload)},
        {"download", target_json(c.latency.download)},
        {"process", target_json(c.latency.process)}}},
      {"diurnal",
       {{"upload", diurnal_json(c.diurnal_upload)},
        {"download", diurnal_json(c.diurnal_download)},
        {"process", diurnal_json(c.diurnal_process)}}},
      {"function", function},
      {"worker_count", c.worker_count},
      {"qos_limit_ms", c.qos_limit_ms},
      {"window_ms", c.window_ms},
      {"per_vehicle_breakdown", c.per_vehicle_breakdown},
      {"export_traces", c.export_traces},
  };
}

std::vector<BuiltinScenario> builtin_scenarios() {
  std::vector<BuiltinScenario> out;

  ScenarioConfig t1;
  t1.name = "table1-replication";
  out.push_back({t1.name, "3 vehicles x 1000 serialized probes, field-run latency targets, flat diurnal, limit 1000 ms",
                 t1});

  ScenarioConfig d;
  d.name = "diurnal-24h";
  d.samples_per_vehicle = std::nullopt;
  d.duration_ms = kMillisPerDay;
  d.emission.probe_gap_ms = 20'000;
  d.latency_profile = "fig8";
  d.latency = fig8_targets();
  d.diurnal_upload = std::string("default");
  d.diurnal_download = std::string("default");
  out.push_back({d.name, "3 vehicles probing every ~20 s for 24 h with peak/off-peak diurnal multipliers", d});

  ScenarioConfig s;
  s.name = "scaling-sweep";
  s.n_vehicles = 1000;
  s.samples_per_vehicle = std::nullopt;
  s.duration_ms = 10'000;
  s.emission = {EmissionKind::kFreeRunning, 0, 10.0};
  s.function.capacity = 100;
  s.function.per_record_ms = 2.0;
  out.push_back({s.name, "1000 vehicles at 10 Hz for 10 s, capacity 100 per function, 2 ms per record", s});

  ScenarioConfig b;
  b.name = "server-baseline";
  b.mode = runtime::ExecutionMode::kServerBased;
  b.worker_count = 1;
  out.push_back({b.name, "table1-replication workload on one fixed server worker with a FIFO queue", b});

  return out;
}

ScenarioConfig builtin(const std::string& name) {
  for (auto& s : builtin_scenarios()) {
    if (s.name == name) return s.config;
  }
  throw ConfigError("scenario", fmt::format("unknown scenario '{}'", name));
}

}  // namespace tcps::scenario
