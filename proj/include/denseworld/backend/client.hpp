// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "denseworld/backend/messages.hpp"
#include "denseworld/backend/profile.hpp"
#include "denseworld/backend/transport.hpp"

namespace denseworld::backend {

// Exponential backoff with full jitter: before retry n (0-based) the client
// sleeps uniform(0, min(max_delay, base * factor^n)) seconds.
struct RetryPolicy {
  double base_delay_seconds = 1.0;
  double factor = 2.0;
  double max_delay_seconds = 60.0;
  std::uint64_t jitter_seed = 0x5eed;

  double delay_cap(std::size_t retry_index) const;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

// Counts requests in flight against one profile and blocks admission at the
// profile's ceiling.
class AdmissionGate {
 public:
  explicit AdmissionGate(std::size_t limit) : limit_(limit) {}
  void acquire();
  void release();
  std::size_t in_flight() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t limit_;
  std::size_t active_ = 0;
};

// Shareable across threads. Every call goes through the profile's admission
// gate, is retried on TransportError up to profile.retry_limit times, and
// segmentation results are validated against the request image size.
class BackendClient {
 public:
  explicit BackendClient(std::shared_ptr<Transport> transport,
                         RetryPolicy policy = {}, Sleeper sleeper = {});

  ChatResponse chat(const BackendProfile& profile, const ChatRequest& request);
  SegmentResponse segment(const BackendProfile& profile,
                          const SegmentRequest& request);

  Transport& transport() { return *transport_; }

 private:
  template <typename Fn>
  auto with_retries(const BackendProfile& profile, Fn&& attempt)
      -> decltype(attempt());
  AdmissionGate& gate_for(const BackendProfile& profile);
  double jittered_delay(std::size_t retry_index);

  std::shared_ptr<Transport> transport_;
  RetryPolicy policy_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<AdmissionGate>> gates_;
  std::mt19937_64 rng_;
};

// Checks mask sizes and score ranges; throws ValidationError.
void validate_segment_response(const SegmentRequest& request,
                               const SegmentResponse& response);

}  // namespace denseworld::backend
