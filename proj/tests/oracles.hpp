#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Each one is deliberately naive so it can be checked by eye.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "tcps/kv/kvstore.hpp"
#include "tcps/net/latency_model.hpp"
#include "tcps/sim/rng.hpp"

namespace oracle {

/// Sort, then walk up until at least p/100 of the samples are at or below
/// the current position.
inline double percentile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const double need = p / 100.0 * static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (static_cast<double>(i + 1) >= need - 1e-9) return xs[i];
  }
  return xs.back();
}

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double variance(const std::vector<double>& xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double std_error(const std::vector<double>& xs) {
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

/// |mean(a) - mean(b)| in units of the standard error of the difference.
inline double mean_diff_in_se(const std::vector<double>& a, const std::vector<double>& b) {
  const double se = std::sqrt(variance(a) / a.size() + variance(b) / b.size());
  return std::abs(mean(a) - mean(b)) / se;
}

/// Draws n log-normal values straight from the parameters, no rounding.
inline std::vector<double> lognormal_draws(const tcps::net::LogNormalParams& p, std::size_t n, std::uint64_t seed) {
  tcps::RngStream rng(seed, "oracle");
  std::vector<double> out(n);
  for (auto& x : out) x = std::exp(p.mu + p.sigma * rng.standard_normal());
  return out;
}

/// Kolmogorov-Smirnov distance of standardized values against N(0, 1).
inline double ks_distance_normal(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = tcps::net::normal_cdf(z[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

struct StoredRecord {
  std::string key;
  std::int64_t write_time = 0;
  std::uint64_t version = 0;
};

/// Linear filter: key prefix match and write_time in (at - window, at].
inline std::vector<StoredRecord> scan(const std::vector<StoredRecord>& all, const std::string& prefix,
                                      std::int64_t window, std::int64_t at) {
  std::vector<StoredRecord> out;
  for (const auto& r : all) {
    if (r.key.rfind(prefix, 0) == 0 && r.write_time > at - window && r.write_time <= at) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.write_time != b.write_time) return a.write_time < b.write_time;
    if (a.key != b.key) return a.key < b.key;
    return a.version < b.version;
  });
  return out;
}

/// FIFO queue in front of `servers` identical servers; returns start times.
/// Ties for a free server go to the lowest index.
inline std::vector<std::int64_t> fifo_replay(const std::vector<std::int64_t>& arrivals,
                                             const std::vector<std::int64_t>& service, std::size_t servers) {
  std::vector<std::int64_t> free_at(servers, 0);
  std::vector<std::int64_t> start(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < servers; ++s) {
      if (free_at[s] < free_at[best]) best = s;
    }
    start[i] = std::max(arrivals[i], free_at[best]);
    free_at[best] = start[i] + service[i];
  }
  return start;
}

/// Mean speed (mph) per segment over every trajectory record in the store
/// written in (at - window, at], recomputed from the full version history.
inline std::map<std::string, double> segment_means_mph(const tcps::kv::KvStore& store, const std::string& table,
                                                       std::int64_t window, std::int64_t at) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& ev : store.stream(table)) {
    const auto t = ev.record->write_time.millis();
    if (t <= at - window || t > at) continue;
    auto seg = tcps::kv::get_string(ev.new_value(), "segment_id");
    auto speed = tcps::kv::get_number(ev.new_value(), "speed_mps");
    if (!seg || !speed || *speed < 0) continue;
    acc[*seg].first += *speed;
    acc[*seg].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [seg, sc] : acc) out[seg] = sc.first / sc.second / 0.44704;
  return out;
}

}  // namespace oracle
