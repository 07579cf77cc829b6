#include "tcps/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tcps/metrics/metrics.hpp"
#include "tcps/net/latency_model.hpp"
#include "tcps/runtime/shard_plan.hpp"
#include "tcps/scenario/config.hpp"
#include "tcps/scenario/simulation.hpp"

namespace tcps::cli {
namespace {

namespace fs = std::filesystem;
using scenario::ScenarioConfig;

struct BaseOptions {
  std::string scenario;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> qos_limit;
  std::string out_dir;
};

void add_base_options(CLI::App& cmd, BaseOptions& o) {
  cmd.add_option("--scenario", o.scenario, "Builtin preset to start from");
  cmd.add_option("--config", o.config_path, "JSON config; keys override the preset");
  cmd.add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd.add_option("--qos-limit", o.qos_limit, "QoS limit in ms (overrides the config)");
  cmd.add_option("--out", o.out_dir, "Output directory");
}

ScenarioConfig load_config(const BaseOptions& o, const std::string& default_scenario) {
  const std::string name = o.scenario.empty() ? default_scenario : o.scenario;
  ScenarioConfig c = name.empty() ? ScenarioConfig{} : scenario::builtin(name);
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw scenario::ConfigError("--config", fmt::format("cannot open {}", o.config_path));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw scenario::ConfigError("--config", e.what());
    }
    c = scenario::apply_json(std::move(c), j);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.qos_limit) c.qos_limit_ms = *o.qos_limit;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  return c;
}

std::string ms(double v) { return fmt::format("{:.0f}", v); }

int cmd_run(const BaseOptions& o, std::ostream& out) {
  const ScenarioConfig c = load_config(o, "table1-replication");
  const auto result = scenario::run_simulation(c);
  scenario::write_artifacts(result, c.output_dir);

  if (!result.report) {
    out << fmt::format("{}: no transaction completed; artifacts in {}\n", c.name, c.output_dir);
    return kExitQosFail;
  }
  const auto& r = *result.report;
  out << fmt::format("scenario {} seed {}: {} samples\n", c.name, c.seed, r.end_to_end.n);
  out << fmt::format("  upload   mean {} p95 {}\n", ms(r.upload.mean_ms), ms(r.upload.p95_ms));
  out << fmt::format("  download mean {} p95 {}\n", ms(r.download.mean_ms), ms(r.download.p95_ms));
  out << fmt::format("  process  mean {} p95 {}\n", ms(r.process.mean_ms), ms(r.process.p95_ms));
  out << fmt::format("  wait     mean {} p95 {}\n", ms(r.wait.mean_ms), ms(r.wait.p95_ms));
  out << fmt::format("  total    mean {} p95 {} (sum of p95 {})\n", ms(r.end_to_end.mean_ms),
                     ms(r.end_to_end.p95_ms), ms(r.sum_of_p95_ms));
  out << fmt::format("  verdict  {} (< {} ms)\n", r.pass ? "pass" : "fail", ms(r.limit_ms));
  out << fmt::format("artifacts in {}\n", c.output_dir);
  return r.pass ? kExitPass : kExitQosFail;
}

std::optional<std::size_t> parse_capacity(const std::string& s) {
  if (s == "unbounded") return std::nullopt;
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || pos == 0 || v < 1) {
    throw scenario::ConfigError("--capacities", fmt::format("'{}' is not a capacity >= 1 or \"unbounded\"", s));
  }
  return static_cast<std::size_t>(v);
}

int cmd_sweep(const BaseOptions& o, const std::vector<std::size_t>& vehicles,
              const std::vector<std::string>& capacities, std::ostream& out, std::ostream& err) {
  if (vehicles.empty()) throw scenario::ConfigError("--vehicles", "list is empty");
  if (capacities.empty()) throw scenario::ConfigError("--capacities", "list is empty");
  std::vector<std::optional<std::size_t>> caps;
  for (const auto& s : capacities) caps.push_back(parse_capacity(s));

  const ScenarioConfig base = load_config(o, "scaling-sweep");
  fs::create_directories(base.output_dir);
  std::ofstream summary(fs::path(base.output_dir) / "sweep_summary.csv", std::ios::binary | std::ios::trunc);
  summary << "N,C,shard_count,p95_wait,p95_total,verdict\n";

  bool all_pass = true;
  for (std::size_t n : vehicles) {
    for (std::size_t i = 0; i < caps.size(); ++i) {
      ScenarioConfig c = base;
      c.n_vehicles = n;
      c.function.capacity = caps[i];
      c.name = fmt::format("{}-n{}-c{}", base.name, n, capacities[i]);
      c.output_dir = (fs::path(base.output_dir) / fmt::format("n{}_c{}", n, capacities[i])).string();
      std::string row;
      try {
        const auto result = scenario::run_simulation(c);
        scenario::write_artifacts(result, c.output_dir);
        const auto waits = result.dispatch_waits();
        const std::string p95_wait = waits.empty() ? "" : ms(metrics::percentile(waits, 95.0));
        const std::string p95_total = result.report ? ms(result.report->end_to_end.p95_ms) : "";
        const bool pass = result.report && result.report->pass;
        all_pass = all_pass && pass;
        row = fmt::format("{},{},{},{},{},{}", n, capacities[i], result.plan.shard_count, p95_wait, p95_total,
                          pass ? "pass" : "fail");
      } catch (const std::exception& e) {
        all_pass = false;
        err << fmt::format("cell N={} C={}: {}\n", n, capacities[i], e.what());
        row = fmt::format("{},{},,,,error", n, capacities[i]);
      }
      summary << row << '\n';
      out << row << '\n';
    }
  }
  return all_pass ? kExitPass : kExitQosFail;
}

int cmd_calibrate(double mean, double p95, std::ostream& out) {
  const auto p = net::calibrate(mean, p95);
  out << fmt::format("mu {:.6f}\nsigma {:.6f}\nanalytic_mean {:.6f}\nanalytic_p95 {:.6f}\n", p.mu, p.sigma,
                     net::analytic_mean(p), net::analytic_p95(p));
  return kExitPass;
}

int cmd_scenarios(std::ostream& out) {
  for (const auto& s : scenario::builtin_scenarios()) out << fmt::format("{:<20} {}\n", s.name, s.description);
  return kExitPass;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Serverless traffic surveillance simulator"};
  app.require_subcommand(1);

  BaseOptions run_opts;
  auto* run = app.add_subcommand("run", "Run one scenario and write its artifacts");
  add_base_options(*run, run_opts);

  BaseOptions sweep_opts;
  std::vector<std::size_t> vehicles;
  std::vector<std::string> capacities;
  auto* sweep = app.add_subcommand("sweep", "Run every (vehicles, capacity) pair");
  add_base_options(*sweep, sweep_opts);
  sweep->add_option("--vehicles", vehicles, "Fleet sizes")->required()->delimiter(',');
  sweep->add_option("--capacities", capacities, "Capacities (integers or \"unbounded\")")->required()->delimiter(',');

  double mean = 0.0;
  double p95 = 0.0;
  auto* calibrate = app.add_subcommand("calibrate", "Solve log-normal parameters for a mean / p95 pair");
  calibrate->add_option("--mean", mean, "Target mean in ms")->required();
  calibrate->add_option("--p95", p95, "Target p95 in ms")->required();

  auto* scenarios = app.add_subcommand("scenarios", "List builtin presets");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts, out);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, vehicles, capacities, out, err);
    if (calibrate->parsed()) return cmd_calibrate(mean, p95, out);
    if (scenarios->parsed()) return cmd_scenarios(out);
  } catch (const net::CalibrationError& e) {
    err << "calibration error: " << e.what() << '\n';
    return kExitCalibration;
  } catch (const scenario::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tcps::cli
