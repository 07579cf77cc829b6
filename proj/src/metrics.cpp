#include "tcps/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace tcps::metrics {

DelaySample make_sample(const TransactionTrace& tr, net::DayClock clock) {
  if (!tr.complete() || !tr.t_stored || !tr.t_invoke_start || !tr.t_invoke_end) {
    throw std::logic_error(fmt::format("txn {} is not complete", tr.txn_id));
  }
  DelaySample s{
      .txn_id = tr.txn_id,
      .vehicle_id = tr.vehicle_id,
      .t_emit = tr.t_emit,
      .upload_ms = *tr.t_stored - tr.t_emit,
      .wait_ms = *tr.t_invoke_start - *tr.t_stored,
      .process_ms = *tr.t_invoke_end - *tr.t_invoke_start,
      .download_ms = *tr.t_feedback - *tr.t_invoke_end,
      .total_ms = tr.total_ms(),
      .day_bucket = net::bucket_of(tr.t_emit, clock).index(),
  };
  return s;
}

std::vector<double> column(std::span<const DelaySample> samples, Component c) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    Millis v = 0;
    switch (c) {
      case Component::kUpload: v = s.upload_ms; break;
      case Component::kWait: v = s.wait_ms; break;
      case Component::kProcess: v = s.process_ms; break;
      case Component::kDownload: v = s.download_ms; break;
      case Component::kTotal: v = s.total_ms; break;
    }
    out.push_back(static_cast<double>(v));
  }
  return out;
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of an empty sample set");
  if (!(p > 0.0) || p > 100.0) throw std::invalid_argument(fmt::format("percentile {} outside (0, 100]", p));
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double percentile(std::span<const double> samples, double p) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return percentile_sorted(sorted, p);
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summary of an empty sample set");
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  return {.n = values.size(), .mean_ms = sum / static_cast<double>(values.size()), .p95_ms = percentile(values, 95.0)};
}

QosReport build_report(std::span<const DelaySample> samples, double limit_ms) {
  if (samples.empty()) throw std::invalid_argument("cannot build a report from zero samples");
  QosReport r;
  r.upload = summarize(column(samples, Component::kUpload));
  r.wait = summarize(column(samples, Component::kWait));
  r.process = summarize(column(samples, Component::kProcess));
  r.download = summarize(column(samples, Component::kDownload));
  r.end_to_end = summarize(column(samples, Component::kTotal));
  r.sum_of_p95_ms = r.upload.p95_ms + r.process.p95_ms + r.download.p95_ms;
  r.limit_ms = limit_ms;
  r.pass = r.end_to_end.p95_ms < limit_ms;
  return r;
}

std::vector<CdfPoint> cdf_points(std::span<const double> samples) {
  if (samples.empty()) return {};
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  out.back().cum_fraction = 1.0;
  return out;
}

std::array<BucketRow, net::kDayBuckets> diurnal_summary(std::span<const DelaySample> samples) {
  std::array<std::vector<DelaySample>, net::kDayBuckets> by_bucket;
  for (const auto& s : samples) by_bucket.at(static_cast<std::size_t>(s.day_bucket)).push_back(s);

  std::array<BucketRow, net::kDayBuckets> rows;
  for (int b = 0; b < net::kDayBuckets; ++b) {
    const auto& group = by_bucket[static_cast<std::size_t>(b)];
    rows[static_cast<std::size_t>(b)].bucket = b;
    if (group.empty()) continue;
    rows[static_cast<std::size_t>(b)].upload = summarize(column(group, Component::kUpload));
    rows[static_cast<std::size_t>(b)].download = summarize(column(group, Component::kDownload));
    rows[static_cast<std::size_t>(b)].end_to_end = summarize(column(group, Component::kTotal));
  }
  return rows;
}

nlohmann::json to_json(const MetricSummary& s) {
  return {{"n", s.n},
          {"mean_ms", std::llround(s.mean_ms)},
          {"p95_ms", std::llround(s.p95_ms)},
          {"mean_ms_exact", s.mean_ms},
          {"p95_ms_exact", s.p95_ms}};
}

nlohmann::json to_json(const QosReport& r) {
  return {
      {"upload", to_json(r.upload)},
      {"wait", to_json(r.wait)},
      {"process", to_json(r.process)},
      {"download", to_json(r.download)},
      {"end_to_end", to_json(r.end_to_end)},
      {"sum_of_p95_ms", std::llround(r.sum_of_p95_ms)},
      {"sum_of_p95_ms_exact", r.sum_of_p95_ms},
      {"end_to_end_p95_kinds",
       {{"end_to_end.p95_ms", "p95 of per-transaction total delay"},
        {"sum_of_p95_ms", "p95(upload) + p95(process) + p95(download), the tabulated end-to-end 95th percentile"}}},
      {"limit_ms", r.limit_ms},
      {"verdict", r.pass ? "pass" : "fail"},
  };
}

nlohmann::json to_json(const std::array<BucketRow, net::kDayBuckets>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = {{"bucket", row.bucket},
                        {"hours", fmt::format("{:02}:00-{:02}:00", row.bucket * 3, row.bucket * 3 + 3)}};
    if (!row.upload) {
      j["absent"] = true;
    } else {
      j["absent"] = false;
      j["upload"] = to_json(*row.upload);
      j["download"] = to_json(*row.download);
      j["end_to_end"] = to_json(*row.end_to_end);
    }
    out.push_back(std::move(j));
  }
  return out;
}

void write_samples_csv(std::ostream& out, std::span<const DelaySample> samples) {
  out << "txn_id,vehicle_id,t_emit,upload_ms,wait_ms,process_ms,download_ms,total_ms,day_bucket\n";
  for (const auto& s : samples) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", s.txn_id, s.vehicle_id, s.t_emit.millis(), s.upload_ms,
                       s.wait_ms, s.process_ms, s.download_ms, s.total_ms, s.day_bucket);
  }
}

void write_cdf_csv(std::ostream& out, std::span<const CdfPoint> points) {
  out << "value_ms,cum_fraction\n";
  for (const auto& p : points) out << fmt::format("{},{:.6f}\n", p.value, p.cum_fraction);
}

}  // namespace tcps::metrics
