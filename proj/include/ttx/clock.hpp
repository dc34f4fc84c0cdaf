#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace ttx {

using Timestamp =
    std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;
using Duration = std::chrono::milliseconds;
using ClockFn = std::function<Timestamp()>;

Timestamp system_now();

// RFC 3339 UTC with millisecond precision, e.g. 2024-01-01T10:00:00.000Z.
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

// Deterministic clock for scripted runs: every read returns the current value
// and then moves forward by `step`.
class ManualClock {
 public:
  explicit ManualClock(Timestamp start, Duration step = std::chrono::seconds(1))
      : now_(start.time_since_epoch().count()), step_(step.count()) {}

  Timestamp tick() {
    return Timestamp(Duration(now_.fetch_add(step_)));
  }
  Timestamp peek() const { return Timestamp(Duration(now_.load())); }
  void set(Timestamp t) { now_.store(t.time_since_epoch().count()); }

  ClockFn as_fn() {
    return [this] { return tick(); };
  }

 private:
  std::atomic<long long> now_;
  long long step_;
};

}  // namespace ttx
