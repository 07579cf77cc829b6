#include "tcps/net/latency_model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace tcps::net {

LogNormalParams calibrate(double mean, double p95) {
  if (!(mean > 0.0) || !(p95 > 0.0)) {
    throw CalibrationError(fmt::format("calibration targets must be positive (mean={}, p95={})", mean, p95));
  }
  if (p95 < mean) {
    throw CalibrationError(fmt::format("p95 {} is below mean {}", p95, mean));
  }
  const double log_ratio = std::log(p95 / mean);
  const double disc = kZ95 * kZ95 - 2.0 * log_ratio;
  if (disc < 0.0) {
    throw CalibrationError(fmt::format("p95/mean ratio {} exceeds the log-normal limit exp(z^2/2)", p95 / mean));
  }
  const double sigma = log_ratio == 0.0 ? 0.0 : std::max(0.0, kZ95 - std::sqrt(disc));
  return {.mu = std::log(mean) - 0.5 * sigma * sigma, .sigma = sigma};
}

double analytic_mean(const LogNormalParams& p) { return std::exp(p.mu + 0.5 * p.sigma * p.sigma); }

double analytic_p95(const LogNormalParams& p) { return std::exp(p.mu + kZ95 * p.sigma); }

DayBucket bucket_of(SimTime at, DayClock clock) {
  const Millis time_of_day = (clock.start_time_of_day_ms + at.millis()) % kMillisPerDay;
  return DayBucket(static_cast<int>(time_of_day / kBucketMillis));
}

bool DiurnalProfile::flat() const {
  return std::all_of(multipliers.begin(), multipliers.end(), [](double m) { return m == 1.0; });
}

DiurnalProfile DiurnalProfile::upload_default() {
  // 12:00-15:00 peak.
  return {{0.95, 0.95, 0.95, 0.95, 1.15, 0.95, 0.95, 0.95}};
}

DiurnalProfile DiurnalProfile::download_default() {
  // 03:00-09:00, 12:00-15:00 and 18:00-21:00 peaks.
  return {{0.95, 1.15, 1.15, 0.95, 1.15, 0.95, 1.15, 0.95}};
}

void validate(const DiurnalProfile& profile) {
  for (double m : profile.multipliers) {
    if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("diurnal multipliers must be positive");
  }
}

LatencyModel LatencyModel::calibrated(std::string label, double mean_ms, double p95_ms, DiurnalProfile diurnal) {
  validate(diurnal);
  return {std::move(label), calibrate(mean_ms, p95_ms), diurnal};
}

LatencyModel LatencyModel::constant(std::string label, double ms) { return calibrated(std::move(label), ms, ms); }

Millis sample(const LatencyModel& model, DayBucket bucket, RngStream& rng) {
  // Always consume one normal draw so sigma=0 models keep stream alignment.
  const double z = rng.standard_normal();
  const double x = std::exp(model.params.mu + model.params.sigma * z);
  return std::max<Millis>(1, round_half_up(x * model.diurnal.at(bucket)));
}

Millis sample(const LatencyModel& model, SimTime at, DayClock clock, RngStream& rng) {
  return sample(model, bucket_of(at, clock), rng);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace tcps::net
