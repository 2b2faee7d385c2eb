#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace elabqud::backends {

// Token bucket refilled continuously at `requests_per_minute`; a rate of 0
// disables limiting.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TokenBucket(double requests_per_minute = 0.0, double burst = 1.0)
      : rate_per_sec_(requests_per_minute / 60.0), capacity_(std::max(1.0, burst)), tokens_(capacity_),
        last_(Clock::now()) {}

  void acquire() {
    if (rate_per_sec_ <= 0.0) return;
    std::unique_lock lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

  bool try_acquire() {
    if (rate_per_sec_ <= 0.0) return true;
    std::lock_guard lock(mu_);
    refill();
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
  }

 private:
  void refill() {
    auto now = Clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
    last_ = now;
  }

  double rate_per_sec_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

class Semaphore {
 public:
  explicit Semaphore(int permits) : permits_(std::max(1, permits)) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return permits_ > 0; });
    --permits_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++permits_;
    }
    cv_.notify_one();
  }

 private:
  int permits_;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace elabqud::backends
