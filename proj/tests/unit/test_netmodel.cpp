#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tcps/metrics/metrics.hpp"
#include "tcps/net/latency_model.hpp"

using namespace tcps;
using namespace tcps::net;

TEST_CASE("calibration solves the quadratic exactly") {
  struct Case {
    double mean, p95, mu, sigma;
  };
  for (const auto& c : {Case{85, 136, 4.3927, 0.3161}, Case{41, 74, 3.6294, 0.4103}, Case{84, 139, 0, 0}}) {
    CAPTURE(c.mean);
    const auto p = calibrate(c.mean, c.p95);
    CHECK(std::abs(analytic_mean(p) / c.mean - 1) < 1e-9);
    CHECK(std::abs(analytic_p95(p) / c.p95 - 1) < 1e-9);
    if (c.mu != 0) {
      CHECK(p.mu == doctest::Approx(c.mu).epsilon(1e-4));
      CHECK(p.sigma == doctest::Approx(c.sigma).epsilon(1e-3));
    }
  }
}

TEST_CASE("equal mean and p95 gives a constant") {
  const auto p = calibrate(100, 100);
  CHECK(p.sigma == 0.0);
  CHECK(p.mu == doctest::Approx(std::log(100.0)));
}

TEST_CASE("infeasible targets are rejected") {
  CHECK_THROWS_AS(calibrate(100, 50), CalibrationError);
  CHECK_THROWS_AS(calibrate(0, 50), CalibrationError);
  CHECK_THROWS_AS(calibrate(-1, 50), CalibrationError);
  const double limit = std::exp(kZ95 * kZ95 / 2);
  CHECK_NOTHROW(calibrate(10, 10 * limit * (1 - 1e-12)));
  CHECK_THROWS_AS(calibrate(10, 10 * limit * 1.01), CalibrationError);
}

TEST_CASE("monte carlo agrees with the targets") {
  for (auto [mean, p95] : {std::pair{85.0, 136.0}, {41.0, 74.0}}) {
    const auto draws = oracle::lognormal_draws(calibrate(mean, p95), 1'000'000, 11);
    CHECK(std::abs(oracle::mean(draws) / mean - 1) < 0.01);
    CHECK(std::abs(metrics::percentile(draws, 95) / p95 - 1) < 0.02);
  }
}

TEST_CASE("rounded samples keep mean and p95") {
  const auto m = LatencyModel::calibrated("upload", 85, 136);
  RngStream rng(3, "upload");
  std::vector<double> xs(1'000'000);
  for (auto& x : xs) x = static_cast<double>(sample(m, DayBucket(0), rng));
  CHECK(std::abs(oracle::mean(xs) / 85 - 1) < 0.01);
  CHECK(std::abs(metrics::percentile(xs, 95) / 136 - 1) < 0.02);
}

TEST_CASE("standardized log samples pass a KS check") {
  // Large scale so that whole-millisecond rounding is negligible.
  const auto m = LatencyModel::calibrated("process", 41'000, 74'000);
  RngStream rng(5, "process");
  std::vector<double> z(100'000);
  for (auto& v : z) {
    v = (std::log(static_cast<double>(sample(m, DayBucket(0), rng))) - m.params.mu) / m.params.sigma;
  }
  CHECK(oracle::ks_distance_normal(z) < 0.01);
}

TEST_CASE("degenerate model always returns the constant") {
  const auto m = LatencyModel::constant("upload", 85);
  RngStream rng(1, "upload");
  for (int i = 0; i < 1000; ++i) CHECK(sample(m, DayBucket(i % 8), rng) == 85);
}

TEST_CASE("samples are at least one millisecond") {
  const auto m = LatencyModel::calibrated("x", 0.2, 0.3);
  RngStream rng(1, "x");
  for (int i = 0; i < 10000; ++i) CHECK(sample(m, DayBucket(0), rng) >= 1);
}

TEST_CASE("bucket multiplier scales the mean") {
  auto m = LatencyModel::calibrated("upload", 85, 136);
  m.diurnal.multipliers[4] = 2.0;
  RngStream a(8, "upload"), b(9, "upload");
  double flat = 0, doubled = 0;
  constexpr int n = 400'000;
  for (int i = 0; i < n; ++i) {
    flat += static_cast<double>(sample(m, DayBucket(0), a));
    doubled += static_cast<double>(sample(m, DayBucket(4), b));
  }
  CHECK(std::abs(doubled / flat - 2.0) < 0.04);
}

TEST_CASE("larger multiplier never yields a smaller delay for the same draw") {
  auto m = LatencyModel::calibrated("upload", 85, 136, DiurnalProfile::upload_default());
  RngStream a(4, "upload"), b(4, "upload");
  for (int i = 0; i < 10000; ++i) CHECK(sample(m, DayBucket(4), a) >= sample(m, DayBucket(0), b));
}

TEST_CASE("bucket_of maps time of day") {
  CHECK(bucket_of(SimTime(0)).index() == 0);
  CHECK(bucket_of(SimTime(13 * kMillisPerHour + kMillisPerHour / 2)).index() == 4);
  CHECK(bucket_of(SimTime(kMillisPerDay)).index() == 0);
  CHECK(bucket_of(SimTime(3 * kMillisPerHour - 1)).index() == 0);
  CHECK(bucket_of(SimTime(3 * kMillisPerHour)).index() == 1);
  CHECK(bucket_of(SimTime(0), DayClock{22 * kMillisPerHour}).index() == 7);
  CHECK(bucket_of(SimTime(2 * kMillisPerHour), DayClock{22 * kMillisPerHour}).index() == 0);
  CHECK_THROWS(DayBucket(8));
}

TEST_CASE("diurnal defaults and validation") {
  const auto up = DiurnalProfile::upload_default();
  for (int b = 0; b < kDayBuckets; ++b) CHECK(up.at(DayBucket(b)) == (b == 4 ? 1.15 : 0.95));
  const auto down = DiurnalProfile::download_default();
  for (int b : {1, 2, 4, 6}) CHECK(down.at(DayBucket(b)) == 1.15);
  CHECK(DiurnalProfile::uniform().flat());
  DiurnalProfile bad;
  bad.multipliers[3] = 0.0;
  CHECK_THROWS(validate(bad));
}
