#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcps/net/latency_model.hpp"
#include "tcps/sim/transaction.hpp"

namespace tcps::metrics {

/// Per-transaction delay decomposition. total = upload + wait + process + download.
struct DelaySample {
  TxnId txn_id = 0;
  VehicleId vehicle_id = 0;
  SimTime t_emit;
  Millis upload_ms = 0;
  Millis wait_ms = 0;
  Millis process_ms = 0;
  Millis download_ms = 0;
  Millis total_ms = 0;
  int day_bucket = 0;
};

/// Builds a sample from a completed trace; throws std::logic_error otherwise.
DelaySample make_sample(const TransactionTrace& trace, net::DayClock clock = {});

enum class Component { kUpload, kWait, kProcess, kDownload, kTotal };

std::vector<double> column(std::span<const DelaySample> samples, Component component);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
/// Requires non-empty samples and 0 < p <= 100.
double percentile(std::span<const double> samples, double p);
double percentile_sorted(std::span<const double> sorted, double p);

struct MetricSummary {
  std::size_t n = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

MetricSummary summarize(std::span<const double> values);

struct QosReport {
  MetricSummary upload;
  MetricSummary wait;
  MetricSummary process;
  MetricSummary download;
  MetricSummary end_to_end;
  /// p95(upload) + p95(process) + p95(download): the way a table of
  /// component percentiles adds up to an end-to-end row. It is generally not
  /// the p95 of per-transaction totals, which is end_to_end.p95_ms.
  double sum_of_p95_ms = 0.0;
  double limit_ms = 0.0;
  bool pass = false;  // end_to_end.p95_ms < limit_ms
};

QosReport build_report(std::span<const DelaySample> samples, double limit_ms);

struct CdfPoint {
  double value = 0.0;
  double cum_fraction = 0.0;
};

/// Sorted unique values with their empirical CDF. Empty input gives no points.
std::vector<CdfPoint> cdf_points(std::span<const double> samples);

struct BucketRow {
  int bucket = 0;
  std::optional<MetricSummary> upload;  // absent when the bucket has no samples
  std::optional<MetricSummary> download;
  std::optional<MetricSummary> end_to_end;
};

std::array<BucketRow, net::kDayBuckets> diurnal_summary(std::span<const DelaySample> samples);

nlohmann::json to_json(const MetricSummary& s);
nlohmann::json to_json(const QosReport& r);
nlohmann::json to_json(const std::array<BucketRow, net::kDayBuckets>& rows);

void write_samples_csv(std::ostream& out, std::span<const DelaySample> samples);
void write_cdf_csv(std::ostream& out, std::span<const CdfPoint> points);

}  // namespace tcps::metrics
