// Shared plumbing for the HTTP clients: one-shot JSON POST, retry loop with
// exponential backoff, and the two throttles (in-flight cap, token bucket).
#pragma once

#include <httplib.h>

#include <chrono>
#include <mutex>
#include <random>
#include <semaphore>
#include <string>
#include <thread>

#include "msmi/errors.hpp"
#include "msmi/random.hpp"

namespace msmi::detail {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to base_url + path. Connection-level failures become
/// retryable TransportErrors naming the endpoint.
inline HttpResponse post_json(const std::string& base_url, const std::string& path,
                              const std::string& body, const httplib::Headers& headers,
                              std::chrono::seconds timeout) {
  httplib::Client client(base_url);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  auto result = client.Post(path, headers, body, "application/json");
  if (!result) {
    throw TransportError("POST " + base_url + path + ": " + httplib::to_string(result.error()),
                         /*retryable=*/true);
  }
  return HttpResponse{result->status, result->body};
}

inline bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

struct RetryPolicy {
  int max_retries = 3;  // additional attempts after the first
  std::chrono::milliseconds backoff_base{1000};
  std::uint64_t jitter_seed = 0;
};

/// Runs fn up to 1 + max_retries times, sleeping base * 2^(attempt-1) * jitter
/// between attempts, jitter uniform in [0.5, 1.5). Only retryable
/// TransportErrors are retried; everything else propagates immediately.
/// retries_out (optional) receives the number of retries actually performed.
template <typename F>
auto with_retries(const RetryPolicy& policy, F&& fn, int* retries_out = nullptr) {
  std::mt19937_64 rng(splitmix64(policy.jitter_seed));
  int retries = 0;
  for (;;) {
    try {
      auto value = fn();
      if (retries_out != nullptr) *retries_out = retries;
      return value;
    } catch (const TransportError& error) {
      if (!error.retryable() || retries >= policy.max_retries) {
        if (retries_out != nullptr) *retries_out = retries;
        throw;
      }
      const double jitter = 0.5 + static_cast<double>(bounded_uniform(rng, 1000000)) / 1000000.0;
      const double factor = static_cast<double>(1u << retries) * jitter;
      const auto delay = std::chrono::duration_cast<std::chrono::milliseconds>(
          policy.backoff_base * factor);
      std::this_thread::sleep_for(delay);
      ++retries;
    }
  }
}

/// Caps concurrent requests. A non-positive limit means unlimited.
class InFlightCap {
 public:
  explicit InFlightCap(int limit) : limited_(limit > 0), semaphore_(limited_ ? limit : 1) {}

  class Guard {
   public:
    explicit Guard(InFlightCap* cap) : cap_(cap) {
      if (cap_ != nullptr) cap_->semaphore_.acquire();
    }
    ~Guard() {
      if (cap_ != nullptr) cap_->semaphore_.release();
    }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    InFlightCap* cap_;
  };

  Guard enter() { return Guard(limited_ ? this : nullptr); }

 private:
  bool limited_;
  std::counting_semaphore<> semaphore_;
};

/// Token bucket: `rate` permits per second, burst of one second's worth.
/// A non-positive rate disables throttling.
class RateLimiter {
 public:
  explicit RateLimiter(double rate) : rate_(rate), tokens_(rate > 0 ? rate : 0) {}

  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  void refill() {
    const auto now = std::chrono::steady_clock::now();
    const std::chrono::duration<double> elapsed = now - last_refill_;
    last_refill_ = now;
    tokens_ = std::min(rate_, tokens_ + elapsed.count() * rate_);
  }

  double rate_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_ = std::chrono::steady_clock::now();
  std::mutex mutex_;
};

}  // namespace msmi::detail
