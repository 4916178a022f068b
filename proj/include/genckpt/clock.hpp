#pragma once

#include <chrono>
#include <cstdint>

namespace genckpt {

/// Time source shared by the store, coordinator and workload. Seconds since
/// an arbitrary epoch; the virtual implementation lets tests and the
/// simulated filesystem advance time explicitly.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;

  std::int64_t now_unix() const { return static_cast<std::int64_t>(now()); }
};

class SystemClock final : public Clock {
 public:
  double now() const override {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
  }
};

class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(double start = 0.0) : t_(start) {}
  double now() const override { return t_; }
  void advance(double seconds) { t_ += seconds; }
  void set(double t) { t_ = t; }

 private:
  double t_;
};

}  // namespace genckpt
