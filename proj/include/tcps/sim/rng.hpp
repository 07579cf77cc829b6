#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tcps {

/// A reproducible random stream. Streams derived from the same
/// (master seed, label) produce the same sequence; distinct labels are
/// decorrelated through a 64-bit mixing of the label hash into the seed.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label);

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  double standard_normal();
  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t derived_seed() const { return derived_seed_; }

 private:
  std::uint64_t derived_seed_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t stream_seed(std::uint64_t master_seed, std::string_view label);

}  // namespace tcps
