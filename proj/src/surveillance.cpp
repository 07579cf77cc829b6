#include "tcps/surveillance/surveillance.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tcps::surveillance {

double round_tenth(double value) { return std::round(value * 10.0) / 10.0; }

double mean_speed_mph(std::span<const double> speeds_mps) {
  if (speeds_mps.empty()) throw std::invalid_argument("mean speed of zero records");
  const double sum = std::accumulate(speeds_mps.begin(), speeds_mps.end(), 0.0);
  return mps_to_mph(sum / static_cast<double>(speeds_mps.size()));
}

kv::KvValue to_value(const FeedbackRecord& r) {
  return {
      {"segment_id", r.segment_id},
      {"avg_speed_mph", r.avg_speed_mph},
      {"n_samples", static_cast<std::int64_t>(r.n_samples)},
      {"computed_at", r.computed_at.millis()},
  };
}

std::optional<FeedbackRecord> feedback_from_value(const kv::KvValue& value) {
  auto segment = kv::get_string(value, "segment_id");
  auto avg = kv::get_number(value, "avg_speed_mph");
  auto n = kv::get_int(value, "n_samples");
  auto at = kv::get_int(value, "computed_at");
  if (!segment || !avg || !n || !at || *n < 1 || *at < 0) return std::nullopt;
  return FeedbackRecord{*segment, *avg, static_cast<std::size_t>(*n), SimTime(*at), {}};
}

HandleResult compute_feedback(std::span<const kv::ChangeEvent> batch, const kv::KvStore& store,
                              SimTime snapshot_at, SimTime computed_at, const SurveillanceConfig& config) {
  HandleResult result;
  std::map<std::string, std::vector<TxnId>> touched;
  for (const auto& event : batch) {
    auto segment = kv::get_string(event.new_value(), "segment_id");
    auto speed = kv::get_number(event.new_value(), "speed_mps");
    if (!segment || !speed || *speed < 0.0) {
      ++result.malformed;
      continue;
    }
    auto& lineage = touched[*segment];
    lineage.insert(lineage.end(), event.record->lineage.begin(), event.record->lineage.end());
  }
  if (touched.empty()) return result;

  std::map<std::string, std::vector<double>, std::less<>> speeds;
  store.visit_recent(config.trajectory_table, "", config.window_ms, snapshot_at, [&](const kv::KvRecord& rec) {
    auto seg_it = rec.value.find("segment_id");
    if (seg_it == rec.value.end()) return;
    const auto* segment = std::get_if<std::string>(&seg_it->second);
    if (!segment || !touched.contains(*segment)) return;
    auto speed = kv::get_number(rec.value, "speed_mps");
    if (!speed || *speed < 0.0) return;
    speeds[*segment].push_back(*speed);
  });

  for (auto& [segment, lineage] : touched) {
    auto it = speeds.find(segment);
    if (it == speeds.end()) continue;
    result.feedback.push_back(FeedbackRecord{
        .segment_id = segment,
        .avg_speed_mph = mean_speed_mph(it->second),
        .n_samples = it->second.size(),
        .computed_at = computed_at,
        .lineage = std::move(lineage),
    });
  }
  return result;
}

runtime::Handler SurveillanceApp::handler() {
  return [this](std::span<const kv::ChangeEvent> batch, const runtime::InvocationContext& ctx) {
    auto result = compute_feedback(batch, ctx.store, ctx.t_start, ctx.t_end, config_);
    malformed_ += result.malformed;
    std::vector<runtime::KvWrite> writes;
    writes.reserve(result.feedback.size());
    for (auto& fb : result.feedback) {
      writes.push_back({config_.feedback_table, fb.segment_id, to_value(fb), std::move(fb.lineage)});
    }
    writes_ += writes.size();
    return writes;
  };
}

}  // namespace tcps::surveillance
