#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>

namespace tcps {

/// Duration in whole milliseconds.
using Millis = std::int64_t;

/// Simulation clock value: milliseconds since scenario start. Never negative.
class SimTime {
 public:
  constexpr SimTime() = default;
  constexpr explicit SimTime(Millis millis) : millis_(millis) {
    if (millis < 0) throw std::invalid_argument("SimTime must be non-negative");
  }

  constexpr Millis millis() const { return millis_; }

  friend constexpr auto operator<=>(SimTime, SimTime) = default;

  friend constexpr SimTime operator+(SimTime t, Millis d) { return SimTime(t.millis_ + d); }
  friend constexpr Millis operator-(SimTime a, SimTime b) { return a.millis_ - b.millis_; }

 private:
  Millis millis_ = 0;
};

inline constexpr Millis kMillisPerHour = 3'600'000;
inline constexpr Millis kMillisPerDay = 24 * kMillisPerHour;

/// Rounds a fractional millisecond value half-up to a whole millisecond.
inline Millis round_half_up(double ms) { return static_cast<Millis>(std::floor(ms + 0.5)); }

}  // namespace tcps
