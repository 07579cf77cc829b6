#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "tcps/sim/rng.hpp"
#include "tcps/sim/time.hpp"

namespace tcps::net {

/// Standard normal 95th-percentile quantile used for calibration and the
/// analytic p95 of a log-normal.
inline constexpr double kZ95 = 1.64485;

inline constexpr int kDayBuckets = 8;
inline constexpr Millis kBucketMillis = 3 * kMillisPerHour;

class CalibrationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LogNormalParams {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Log-normal parameters whose mean and p95 equal the targets.
///
/// sigma is the smaller root of sigma^2/2 - z*sigma + ln(p95/mean) = 0 and
/// mu = ln(mean) - sigma^2/2. Requires 0 < mean <= p95 and
/// p95/mean <= exp(z^2/2); throws CalibrationError otherwise.
LogNormalParams calibrate(double target_mean_ms, double target_p95_ms);

double analytic_mean(const LogNormalParams& p);
double analytic_p95(const LogNormalParams& p);

/// Index 0..7 of a 3-hour block of the day: [00:00, 03:00) ... [21:00, 24:00).
class DayBucket {
 public:
  constexpr explicit DayBucket(int index) : index_(index) {
    if (index < 0 || index >= kDayBuckets) throw std::out_of_range("day bucket index out of range");
  }
  constexpr int index() const { return index_; }
  friend constexpr bool operator==(DayBucket, DayBucket) = default;

 private:
  int index_;
};

/// Local time of day at simulation time zero.
struct DayClock {
  Millis start_time_of_day_ms = 0;
};

DayBucket bucket_of(SimTime at, DayClock clock = {});

/// Per-bucket delay multipliers.
struct DiurnalProfile {
  std::array<double, kDayBuckets> multipliers{1, 1, 1, 1, 1, 1, 1, 1};

  double at(DayBucket b) const { return multipliers[static_cast<std::size_t>(b.index())]; }
  bool flat() const;

  static DiurnalProfile uniform() { return {}; }
  /// Peak/off-peak defaults: peak buckets get 1.15, others 0.95.
  static DiurnalProfile upload_default();
  static DiurnalProfile download_default();
};

void validate(const DiurnalProfile& profile);

struct LatencyModel {
  std::string label;
  LogNormalParams params;
  DiurnalProfile diurnal;

  static LatencyModel calibrated(std::string label, double mean_ms, double p95_ms,
                                 DiurnalProfile diurnal = DiurnalProfile::uniform());
  static LatencyModel constant(std::string label, double ms);
};

/// Draws X ~ LogNormal(mu, sigma) and returns round(X * multiplier[bucket]),
/// at least 1 ms.
Millis sample(const LatencyModel& model, DayBucket bucket, RngStream& rng);
Millis sample(const LatencyModel& model, SimTime at, DayClock clock, RngStream& rng);

/// Standard-normal CDF, used by the KS checks.
double normal_cdf(double x);

}  // namespace tcps::net
