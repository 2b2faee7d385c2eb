#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "elabqud/backends/cache.hpp"
#include "elabqud/backends/descriptor.hpp"
#include "elabqud/backends/rate_limit.hpp"

namespace elabqud::backends {

// Anything that can answer a JSON request: a remote client or a local mock.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual json invoke(const json& request) = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{10000};
};

struct GatewayOptions {
  RetryPolicy retry;
  double requests_per_minute = 0.0;
  int max_in_flight = 4;
  std::optional<std::filesystem::path> cache_dir;  // in-memory cache when unset
};

// The concurrency boundary for one backend: cache-first lookup, coalescing of
// identical in-flight requests, bounded parallelism, rate limiting, retries
// with exponential backoff, and write-through caching of validated responses.
class Gateway {
 public:
  using Validator = std::function<void(const json&)>;

  struct Stats {
    std::size_t dispatches = 0;
    std::size_t attempts = 0;
    std::size_t cache_hits = 0;
    std::size_t coalesced = 0;
  };

  Gateway(BackendDescriptor descriptor, std::shared_ptr<Transport> transport, GatewayOptions options = {},
          Validator validator = {})
      : descriptor_(std::move(descriptor)),
        transport_(std::move(transport)),
        options_(std::move(options)),
        validator_(std::move(validator)),
        limiter_(options_.requests_per_minute),
        in_flight_(options_.max_in_flight) {
    if (options_.cache_dir) {
      cache_ = std::make_shared<FileCache>(*options_.cache_dir);
    } else {
      cache_ = std::make_shared<MemoryCache>();
    }
  }

  const BackendDescriptor& descriptor() const { return descriptor_; }

  json call(const json& request) {
    const std::string key = cache_key(descriptor_.backend_id, request);
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      return hit->response;
    }

    std::promise<json> promise;
    std::shared_future<json> result;
    bool leader = false;
    {
      std::lock_guard lock(mu_);
      auto it = pending_.find(key);
      if (it != pending_.end()) {
        ++coalesced_;
        result = it->second;
      } else {
        leader = true;
        result = promise.get_future().share();
        pending_.emplace(key, result);
      }
    }
    if (!leader) return result.get();

    try {
      // Another leader may have completed between the first lookup and taking
      // ownership of the key.
      if (auto hit = cache_->get(key)) {
        ++cache_hits_;
        promise.set_value(hit->response);
      } else {
        json response = dispatch(request);
        cache_->put({key, request, response, utc_now_iso8601()});
        promise.set_value(std::move(response));
      }
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    {
      std::lock_guard lock(mu_);
      pending_.erase(key);
    }
    return result.get();
  }

  Stats stats() const { return {dispatches_.load(), attempts_.load(), cache_hits_.load(), coalesced_.load()}; }

 private:
  json dispatch(const json& request) {
    ++dispatches_;
    const RetryPolicy& policy = options_.retry;
    for (int attempt = 0;; ++attempt) {
      try {
        limiter_.acquire();
        in_flight_.acquire();
        ++attempts_;
        json response;
        try {
          response = transport_->invoke(request);
        } catch (...) {
          in_flight_.release();
          throw;
        }
        in_flight_.release();
        if (validator_) validator_(response);
        return response;
      } catch (const BackendError& e) {
        if (!e.retryable()) throw;
        if (attempt >= policy.max_retries) {
          throw BackendUnavailable(descriptor_.backend_id + ": giving up after " + std::to_string(attempt + 1) +
                                   " attempts: " + e.what());
        }
      }
      auto delay = std::chrono::duration<double, std::milli>(policy.base_delay.count() *
                                                              std::pow(policy.multiplier, attempt));
      std::this_thread::sleep_for(std::min<std::chrono::duration<double, std::milli>>(delay, policy.max_delay));
    }
  }

  BackendDescriptor descriptor_;
  std::shared_ptr<Transport> transport_;
  GatewayOptions options_;
  Validator validator_;
  std::shared_ptr<Cache> cache_;
  TokenBucket limiter_;
  Semaphore in_flight_;

  std::mutex mu_;
  std::map<std::string, std::shared_future<json>> pending_;

  std::atomic<std::size_t> dispatches_{0};
  std::atomic<std::size_t> attempts_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> coalesced_{0};
};

}  // namespace elabqud::backends
