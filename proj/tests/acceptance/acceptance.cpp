// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "tcps/cli/cli.hpp"
#include "tcps/kv/kvstore.hpp"
#include "tcps/metrics/metrics.hpp"
#include "tcps/net/latency_model.hpp"
#include "tcps/runtime/shard_plan.hpp"
#include "tcps/scenario/simulation.hpp"

using namespace tcps;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string what) {
    if (!ok) pass = false;
    notes.push_back(fmt::format("{}{}", ok ? "" : "FAILED ", what));
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool within(double got, double want, double rel) { return std::abs(got / want - 1.0) <= rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string samples_csv(const scenario::RunResult& r) {
  std::ostringstream out;
  metrics::write_samples_csv(out, r.samples);
  return out.str();
}

double p95(const std::vector<double>& xs) { return xs.empty() ? 0.0 : metrics::percentile(xs, 95); }

// 1
Verdict calibration_exactness() {
  const auto t0 = Clock::now();
  Verdict v;
  struct Target {
    const char* label;
    double mean, p95;
  };
  for (const auto& t : {Target{"upload", 85, 136}, Target{"download", 84, 139}, Target{"process", 41, 74}}) {
    const auto p = net::calibrate(t.mean, t.p95);
    const double em = std::abs(net::analytic_mean(p) / t.mean - 1);
    const double ep = std::abs(net::analytic_p95(p) / t.p95 - 1);
    v.require(em < 1e-9 && ep < 1e-9, fmt::format("{} analytic rel err {:.1e}/{:.1e}", t.label, em, ep));

    const auto model = net::LatencyModel::calibrated(t.label, t.mean, t.p95);
    RngStream rng(2024, t.label);
    std::vector<double> xs(1'000'000);
    for (auto& x : xs) x = static_cast<double>(net::sample(model, net::DayBucket(0), rng));
    const double m = oracle::mean(xs);
    const double q = metrics::percentile(xs, 95);
    v.require(within(m, t.mean, 0.01) && within(q, t.p95, 0.02),
              fmt::format("{} MC mean {:.2f} p95 {:.0f}", t.label, m, q));
  }
  const double dt = seconds_since(t0);
  v.require(dt < 10.0, fmt::format("{:.1f}s < 10s", dt));
  return v;
}

// 2
Verdict table1_replication() {
  const auto t0 = Clock::now();
  Verdict v;
  double up_m = 0, up_p = 0, dn_m = 0, dn_p = 0, pr_m = 0, pr_p = 0, e2e = 0;
  constexpr int kSeeds = 5;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto c = scenario::builtin("table1-replication");
    c.seed = static_cast<std::uint64_t>(seed);
    const auto r = scenario::run_simulation(c);
    if (!r.report || r.samples.size() != 3000) {
      v.require(false, fmt::format("seed {} produced {} samples", seed, r.samples.size()));
      return v;
    }
    up_m += r.report->upload.mean_ms;
    up_p += r.report->upload.p95_ms;
    dn_m += r.report->download.mean_ms;
    dn_p += r.report->download.p95_ms;
    pr_m += r.report->process.mean_ms;
    pr_p += r.report->process.p95_ms;
    e2e += r.report->end_to_end.mean_ms;
  }
  auto avg = [&](double s) { return s / kSeeds; };
  auto row = [&](const char* name, double m, double p, double tm, double tp) {
    v.require(within(avg(m), tm, 0.06) && within(avg(p), tp, 0.06),
              fmt::format("{} {:.1f}/{:.1f}", name, avg(m), avg(p)));
  };
  row("upload", up_m, up_p, 85, 136);
  row("download", dn_m, dn_p, 84, 139);
  row("process", pr_m, pr_p, 41, 74);
  v.require(within(avg(e2e), 210, 0.06), fmt::format("e2e mean {:.1f}", avg(e2e)));
  const double dt = seconds_since(t0);
  v.require(dt < 30.0, fmt::format("{:.1f}s < 30s", dt));
  return v;
}

// 3
Verdict sum_of_p95() {
  Verdict v;
  // Any sample set: the identity holds.
  auto c = scenario::builtin("table1-replication");
  const auto r = scenario::run_simulation(c);
  const auto& q = *r.report;
  v.require(q.sum_of_p95_ms == q.upload.p95_ms + q.process.p95_ms + q.download.p95_ms,
            fmt::format("table1 run {:.0f}+{:.0f}+{:.0f}={:.0f}", q.upload.p95_ms, q.process.p95_ms,
                        q.download.p95_ms, q.sum_of_p95_ms));
  RngStream rng(3, "identity");
  bool all = true;
  for (int round = 0; round < 200; ++round) {
    std::vector<metrics::DelaySample> s(1 + static_cast<std::size_t>(rng.uniform(0, 500)));
    for (auto& x : s) {
      x.upload_ms = static_cast<Millis>(rng.uniform(1, 400));
      x.process_ms = static_cast<Millis>(rng.uniform(1, 200));
      x.download_ms = static_cast<Millis>(rng.uniform(1, 400));
      x.total_ms = x.upload_ms + x.process_ms + x.download_ms;
    }
    const auto rep = metrics::build_report(s, 1000);
    all = all && rep.sum_of_p95_ms == rep.upload.p95_ms + rep.process.p95_ms + rep.download.p95_ms;
  }
  v.require(all, "200 random sample sets");
  // Degenerate components pinned at 136 / 74 / 139.
  c.latency = {{136, 136}, {139, 139}, {74, 74}};
  const auto d = scenario::run_simulation(c);
  v.require(d.report && d.report->sum_of_p95_ms == 349.0 && std::llround(d.report->sum_of_p95_ms) == 349,
            fmt::format("degenerate run sum {:.0f}", d.report ? d.report->sum_of_p95_ms : -1));
  return v;
}

// 4
Verdict qos_gate() {
  Verdict v;
  const auto base = fs::temp_directory_path() / "tcps_acceptance_qos";
  fs::remove_all(base);
  std::ostringstream out, err;
  const int ok = cli::run_cli({"run", "--scenario", "table1-replication", "--seed", "1", "--out",
                               (base / "limit1000").string()},
                              out, err);
  const auto verdict = nlohmann::json::parse(slurp(base / "limit1000" / "report.json"))["verdict"];
  v.require(ok == 0 && verdict == "pass", fmt::format("limit 1000: exit {} verdict {}", ok, verdict.dump()));
  const int tight = cli::run_cli({"run", "--scenario", "table1-replication", "--seed", "1", "--qos-limit", "200",
                                  "--out", (base / "limit200").string()},
                                 out, err);
  const auto verdict2 = nlohmann::json::parse(slurp(base / "limit200" / "report.json"))["verdict"];
  v.require(tight != 0 && verdict2 == "fail", fmt::format("limit 200: exit {} verdict {}", tight, verdict2.dump()));
  return v;
}

// 5
Verdict sharding_arithmetic() {
  Verdict v;
  auto ids = [](std::size_t n) {
    std::vector<VehicleId> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<VehicleId>(i);
    return out;
  };
  RngStream rng(5, "shards");
  bool ok = true;
  constexpr int kRounds = 1000;
  for (int i = 0; i < kRounds && ok; ++i) {
    const auto n = static_cast<std::size_t>(rng.uniform(0, 10'001));
    const auto c = static_cast<std::size_t>(rng.uniform(1, 501));
    const auto plan = runtime::plan_shards(ids(n), c);
    const auto sizes = plan.shard_sizes();
    std::size_t total = 0;
    for (auto s : sizes) {
      ok = ok && s <= c && s >= 1;
      total += s;
    }
    ok = ok && plan.shard_count == (n + c - 1) / c && total == n && plan.assignment.size() == n;
  }
  v.require(ok, fmt::format("{} random (N, C)", kRounds));
  const auto plan = runtime::plan_shards(ids(120), 50);
  bool each_once = plan.assignment.size() == 120;
  for (VehicleId id = 0; id < 120; ++id) each_once = each_once && plan.assignment.contains(id);
  v.require(plan.shard_count == 3 && each_once && plan.shard_sizes() == std::vector<std::size_t>{50, 50, 20},
            fmt::format("N=120 C=50 -> {} shards", plan.shard_count));
  return v;
}

// 6
Verdict scaling_behavior() {
  const auto t0 = Clock::now();
  Verdict v;
  auto cell = [](std::size_t n, std::optional<std::size_t> cap) {
    auto c = scenario::builtin("scaling-sweep");
    c.n_vehicles = n;
    c.function.capacity = cap;
    const auto r = scenario::run_simulation(c);
    return std::pair{p95(r.dispatch_waits()), r.plan.shard_count};
  };
  const auto [sharded, shards] = cell(1000, 100);
  std::vector<double> single;
  for (std::size_t n : {10u, 100u, 1000u}) single.push_back(cell(n, std::nullopt).first);
  v.require(shards == 10, fmt::format("{} shards", shards));
  v.require(sharded <= 0.5 * single[2], fmt::format("p95 wait C=100 {:.0f} vs single {:.0f}", sharded, single[2]));
  v.require(single[0] <= single[1] && single[1] <= single[2],
            fmt::format("single-shard p95 wait {:.0f} <= {:.0f} <= {:.0f}", single[0], single[1], single[2]));
  const double dt = seconds_since(t0);
  v.require(dt < 60.0, fmt::format("{:.1f}s < 60s", dt));
  return v;
}

// 7
Verdict server_baseline() {
  Verdict v;
  constexpr std::size_t kWorkers = 4;
  auto server = [&](std::size_t vehicles, Millis duration) {
    auto c = scenario::builtin("server-baseline");
    c.worker_count = kWorkers;
    c.n_vehicles = vehicles;
    c.samples_per_vehicle = std::nullopt;
    c.duration_ms = duration;
    c.emission = {scenario::EmissionKind::kFreeRunning, 0, 2.0};
    return scenario::run_simulation(c);
  };
  // Capacity is kWorkers / 41 ms, about 97.6 events/s.
  const double capacity = kWorkers * 1000.0 / 41.0;

  const auto light = server(30, 300'000);  // 60 events/s
  const double light_p95 = p95(light.dispatch_waits());
  v.require(light.utilization < 1.0 && light_p95 < 1000.0,
            fmt::format("rho {:.2f}: utilization {:.2f}, p95 wait {:.0f}", 60 / capacity, light.utilization,
                        light_p95));

  const auto heavy = server(98, 300'000);  // 196 events/s
  auto wait_at = [&](Millis t) {
    const auto w = heavy.dispatch_waits_stored_in(SimTime(t - 10'000), SimTime(t));
    return w.empty() ? 0.0 : oracle::mean(w);
  };
  const double w150 = wait_at(150'000), w300 = wait_at(300'000);
  v.require(w300 > w150, fmt::format("rho {:.2f}: wait@150s {:.0f} < wait@300s {:.0f}", 196 / capacity, w150, w300));

  auto durations = [](const scenario::RunResult& r) {
    std::vector<double> d;
    for (const auto& inv : r.invocations) d.push_back(static_cast<double>(inv.t_end - inv.t_start));
    return d;
  };
  auto c = scenario::builtin("table1-replication");
  const auto serverless = scenario::run_simulation(c);
  const auto baseline = scenario::run_simulation(scenario::builtin("server-baseline"));
  const double z = oracle::mean_diff_in_se(durations(serverless), durations(baseline));
  v.require(z < 3.0, fmt::format("processing time diff {:.2f} SE", z));
  return v;
}

// 8
Verdict oracles() {
  Verdict v;
  RngStream rng(8, "oracles");
  int pct_bad = 0;
  for (int round = 0; round < 1000; ++round) {
    std::vector<double> xs(1 + static_cast<std::size_t>(rng.uniform(0, 10'000)));
    for (auto& x : xs) x = std::floor(rng.uniform(0, 2000));
    const double p = round % 2 ? 95.0 : rng.uniform(0.1, 100.0);
    pct_bad += metrics::percentile(xs, p) != oracle::percentile(xs, p);
  }
  v.require(pct_bad == 0, fmt::format("percentile 1000 arrays, {} mismatches", pct_bad));

  int scan_bad = 0;
  for (int round = 0; round < 200; ++round) {
    Engine engine(1);
    kv::KvStore store(engine);
    store.create_table("t");
    std::vector<oracle::StoredRecord> all;
    std::int64_t t = 0;
    const int n = 1 + static_cast<int>(rng.uniform(0, 500));
    for (int i = 0; i < n; ++i) {
      t += static_cast<std::int64_t>(rng.uniform(0, 30));
      const std::string key = fmt::format("{}#{}", static_cast<int>(rng.uniform(0, 12)), i % 5);
      const auto rec = store.put("t", key, {{"i", std::int64_t{i}}}, SimTime(t));
      all.push_back({key, t, rec->version});
    }
    for (int q = 0; q < 5; ++q) {
      const std::string prefix = q == 0 ? "" : fmt::format("{}", static_cast<int>(rng.uniform(0, 12)));
      const auto window = 1 + static_cast<std::int64_t>(rng.uniform(0, 2000));
      const auto at = static_cast<std::int64_t>(rng.uniform(0, static_cast<double>(t + 100)));
      const auto want = oracle::scan(all, prefix, window, at);
      const auto got = store.scan_recent("t", prefix, window, SimTime(at));
      bool same = want.size() == got.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) {
        same = got[i]->key == want[i].key && got[i]->write_time.millis() == want[i].write_time &&
               got[i]->version == want[i].version;
      }
      scan_bad += !same;
    }
  }
  v.require(scan_bad == 0, fmt::format("scan_recent 200 stores, {} mismatches", scan_bad));
  return v;
}

// 9
Verdict determinism() {
  Verdict v;
  for (const auto& preset : scenario::builtin_scenarios()) {
    const auto a = scenario::run_simulation(preset.config);
    const auto b = scenario::run_simulation(preset.config);
    auto other = preset.config;
    other.seed += 1;
    const auto c = scenario::run_simulation(other);
    const bool same = scenario::report_json(a).dump() == scenario::report_json(b).dump() &&
                      samples_csv(a) == samples_csv(b);
    const bool differs = samples_csv(a) != samples_csv(c);
    v.require(same && differs, fmt::format("{} {}/{}", preset.name, same ? "same" : "DIFFERENT",
                                           differs ? "seed-sensitive" : "SEED-INSENSITIVE"));
  }
  return v;
}

// 10
Verdict diurnal_structure() {
  Verdict v;
  const auto dir = fs::temp_directory_path() / "tcps_acceptance_diurnal";
  fs::remove_all(dir);
  const auto r = scenario::run_simulation(scenario::builtin("diurnal-24h"));
  scenario::write_artifacts(r, dir);
  const auto rows = metrics::diurnal_summary(r.samples);
  const auto profile = net::DiurnalProfile::upload_default();

  std::size_t min_n = r.samples.size();
  double peak_min = 1e18, off_max = 0;
  for (int b = 0; b < net::kDayBuckets; ++b) {
    const auto& row = rows[static_cast<std::size_t>(b)];
    if (!row.upload) {
      min_n = 0;
      continue;
    }
    min_n = std::min(min_n, row.upload->n);
    if (profile.at(net::DayBucket(b)) > 1.0) peak_min = std::min(peak_min, row.upload->mean_ms);
    else off_max = std::max(off_max, row.upload->mean_ms);
  }
  v.require(min_n >= 1000, fmt::format(">= {} samples per bucket", min_n));
  v.require(peak_min > off_max, fmt::format("peak upload mean {:.1f} > off-peak max {:.1f}", peak_min, off_max));

  bool cdf_ok = true;
  for (const char* name : {"cdf_upload.csv", "cdf_download.csv", "cdf_process.csv", "cdf_total.csv"}) {
    std::istringstream in(slurp(dir / name));
    std::string line;
    std::getline(in, line);
    cdf_ok = cdf_ok && line == "value_ms,cum_fraction";
    double prev_v = -1, prev_f = 0, last = 0;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      const double value = std::stod(line.substr(0, comma));
      const double frac = std::stod(line.substr(comma + 1));
      cdf_ok = cdf_ok && value > prev_v && frac >= prev_f;
      prev_v = value;
      prev_f = last = frac;
    }
    cdf_ok = cdf_ok && last == 1.0;
  }
  v.require(cdf_ok, "4 CDF exports non-decreasing, ending at 1.0");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"calibration exactness", calibration_exactness},
      {"table1 replication", table1_replication},
      {"sum-of-p95 identity", sum_of_p95},
      {"QoS gate", qos_gate},
      {"sharding arithmetic", sharding_arithmetic},
      {"scaling behavior", scaling_behavior},
      {"server-based baseline", server_baseline},
      {"percentile and scan oracles", oracles},
      {"determinism", determinism},
      {"diurnal structure", diurnal_structure},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.require(false, fmt::format("exception: {}", e.what()));
    }
    failed += !v.pass;
    std::string notes;
    for (const auto& n : v.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::cout << fmt::format("criterion {:>2} {} {} ({:.1f}s): {}\n", i + 1, v.pass ? "PASS" : "FAIL",
                             criteria[i].first, seconds_since(t0), notes)
              << std::flush;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
