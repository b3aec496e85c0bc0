#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>

namespace cardpay {

// Seconds since the epoch.
using Clock = std::function<std::int64_t()>;

inline Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

// Settable clock shared between the services of a test or simulation.
class ManualClock {
 public:
  explicit ManualClock(std::int64_t start) : now_(std::make_shared<std::atomic<std::int64_t>>(start)) {}

  std::int64_t now() const { return now_->load(); }
  void set(std::int64_t t) { now_->store(t); }
  void advance(std::int64_t dt) { now_->fetch_add(dt); }

  Clock clock() const {
    return [p = now_] { return p->load(); };
  }

 private:
  std::shared_ptr<std::atomic<std::int64_t>> now_;
};

}  // namespace cardpay
