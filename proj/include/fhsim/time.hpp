#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace fhsim {

// Simulation time is integer nanoseconds. Exact comparisons matter: flow
// installs are 50 us apart and event ordering must not depend on floating
// point rounding.
using SimTime = std::int64_t;

constexpr SimTime kNanosecond = 1;
constexpr SimTime kMicrosecond = 1'000;
constexpr SimTime kMillisecond = 1'000'000;
constexpr SimTime kSecond = 1'000'000'000;

constexpr SimTime from_seconds(double s) {
  return static_cast<SimTime>(s * 1e9 + (s >= 0 ? 0.5 : -0.5));
}

constexpr SimTime from_millis(double ms) {
  return static_cast<SimTime>(ms * 1e6 + (ms >= 0 ? 0.5 : -0.5));
}

constexpr SimTime from_micros(double us) {
  return static_cast<SimTime>(us * 1e3 + (us >= 0 ? 0.5 : -0.5));
}

constexpr double to_seconds(SimTime t) { return static_cast<double>(t) / 1e9; }
constexpr double to_millis(SimTime t) { return static_cast<double>(t) / 1e6; }

// Transmission delay of `bytes` on a link of `bits_per_second`, truncated to
// whole nanoseconds. For the capacities used here (multiples of 1e8) the
// result is exact: 1454 B at 100 Mb/s -> 116320 ns.
constexpr SimTime serialization_time(std::uint64_t bytes, double bits_per_second) {
  const double bits = static_cast<double>(bytes) * 8.0;
  return static_cast<SimTime>(bits * 1e9 / bits_per_second);
}

// Fixed-width decimal seconds, used everywhere a time reaches an output file
// so that logs are byte-stable.
inline std::string format_seconds(SimTime t) {
  char buf[40];
  const bool neg = t < 0;
  const std::uint64_t v = neg ? static_cast<std::uint64_t>(-t) : static_cast<std::uint64_t>(t);
  std::snprintf(buf, sizeof(buf), "%s%llu.%09llu", neg ? "-" : "",
                static_cast<unsigned long long>(v / 1000000000ULL),
                static_cast<unsigned long long>(v % 1000000000ULL));
  return buf;
}

}  // namespace fhsim
