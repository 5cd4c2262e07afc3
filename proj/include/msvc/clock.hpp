#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <thread>

namespace msvc {

/// Time source used by retry delays and cooldown gates. Injectable so the
/// timing-sensitive logic can be exercised in virtual time.
class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(std::chrono::nanoseconds d) = 0;

  void sleep_until(time_point tp) {
    auto t = now();
    if (tp > t) sleep_for(tp - t);
  }
};

class RealClock final : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_for(std::chrono::nanoseconds d) override {
    if (d.count() > 0) std::this_thread::sleep_for(d);
  }
};

/// Advances instantly on sleep; `now` starts at a fixed epoch.
class VirtualClock final : public Clock {
 public:
  time_point now() override {
    return time_point(std::chrono::nanoseconds(offset_ns_.load(std::memory_order_acquire)));
  }
  void sleep_for(std::chrono::nanoseconds d) override {
    if (d.count() > 0) offset_ns_.fetch_add(d.count(), std::memory_order_acq_rel);
  }
  void advance(std::chrono::nanoseconds d) { sleep_for(d); }

 private:
  std::atomic<std::int64_t> offset_ns_{0};
};

inline RealClock& real_clock() {
  static RealClock clock;
  return clock;
}

}  // namespace msvc
