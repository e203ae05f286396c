#pragma once

#include <cstdint>
#include <string>

namespace mptcp {

// Simulation clock: integer nanoseconds. Floats are kept out of the clock so
// golden traces do not drift.
using TimeNs = int64_t;

inline constexpr TimeNs kNanosecond = 1;
inline constexpr TimeNs kMicrosecond = 1000;
inline constexpr TimeNs kMillisecond = 1000 * 1000;
inline constexpr TimeNs kSecond = 1000 * 1000 * 1000;

inline constexpr TimeNs seconds_to_ns(double s) {
  return static_cast<TimeNs>(s * 1e9 + (s >= 0 ? 0.5 : -0.5));
}

inline constexpr double ns_to_seconds(TimeNs t) { return static_cast<double>(t) / 1e9; }

// Fixed-point "S.NNNNNNNNN" rendering used by the CSV writer and summaries.
std::string format_time(TimeNs t);

}  // namespace mptcp
