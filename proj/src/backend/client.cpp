// SPDX-License-Identifier: Apache-2.0
#include "denseworld/backend/client.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "denseworld/error.hpp"

namespace denseworld::backend {

double RetryPolicy::delay_cap(std::size_t retry_index) const {
  const double cap =
      base_delay_seconds * std::pow(factor, static_cast<double>(retry_index));
  return std::min(cap, max_delay_seconds);
}

void AdmissionGate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
}

void AdmissionGate::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

std::size_t AdmissionGate::in_flight() const {
  std::lock_guard lock(mu_);
  return active_;
}

namespace {

class GateLease {
 public:
  explicit GateLease(AdmissionGate& gate) : gate_(gate) { gate_.acquire(); }
  ~GateLease() { gate_.release(); }
  GateLease(const GateLease&) = delete;
  GateLease& operator=(const GateLease&) = delete;

 private:
  AdmissionGate& gate_;
};

}  // namespace

BackendClient::BackendClient(std::shared_ptr<Transport> transport,
                             RetryPolicy policy, Sleeper sleeper)
    : transport_(std::move(transport)),
      policy_(policy),
      sleeper_(std::move(sleeper)),
      rng_(policy.jitter_seed) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::duration<double> d) {
      std::this_thread::sleep_for(d);
    };
  }
}

AdmissionGate& BackendClient::gate_for(const BackendProfile& profile) {
  std::lock_guard lock(mu_);
  auto& slot = gates_[profile.name];
  if (!slot) slot = std::make_unique<AdmissionGate>(profile.max_in_flight);
  return *slot;
}

double BackendClient::jittered_delay(std::size_t retry_index) {
  const double cap = policy_.delay_cap(retry_index);
  std::lock_guard lock(mu_);
  std::uniform_real_distribution<double> dist(0.0, cap);
  return cap > 0.0 ? dist(rng_) : 0.0;
}

template <typename Fn>
auto BackendClient::with_retries(const BackendProfile& profile, Fn&& attempt)
    -> decltype(attempt()) {
  AdmissionGate& gate = gate_for(profile);
  for (std::size_t attempt_index = 0;; ++attempt_index) {
    try {
      GateLease lease(gate);
      return attempt();
    } catch (const TransportError& e) {
      if (attempt_index >= profile.retry_limit) {
        throw TransportError("profile '" + profile.name + "': giving up after " +
                             std::to_string(attempt_index + 1) +
                             " attempts: " + e.what());
      }
    }
    sleeper_(std::chrono::duration<double>(jittered_delay(attempt_index)));
  }
}

ChatResponse BackendClient::chat(const BackendProfile& profile,
                                 const ChatRequest& request) {
  if (!is_chat_role(profile.role)) {
    throw PreconditionError("profile '" + profile.name + "' (" +
                            std::string(to_string(profile.role)) +
                            ") cannot serve chat requests");
  }
  validate(request);
  const auto start = std::chrono::steady_clock::now();
  ChatResponse response =
      with_retries(profile, [&] { return transport_->chat(profile, request); });
  response.latency_seconds = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
  return response;
}

SegmentResponse BackendClient::segment(const BackendProfile& profile,
                                       const SegmentRequest& request) {
  if (!is_segment_role(profile.role)) {
    throw PreconditionError("profile '" + profile.name + "' (" +
                            std::string(to_string(profile.role)) +
                            ") cannot serve segmentation requests");
  }
  const auto start = std::chrono::steady_clock::now();
  SegmentResponse response = with_retries(
      profile, [&] { return transport_->segment(profile, request); });
  validate_segment_response(request, response);
  response.latency_seconds = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
  return response;
}

void validate_segment_response(const SegmentRequest& request,
                               const SegmentResponse& response) {
  for (std::size_t i = 0; i < response.candidates.size(); ++i) {
    const auto& c = response.candidates[i];
    if (c.mask.height != request.height || c.mask.width != request.width) {
      throw ValidationError(
          "mask " + std::to_string(i) + " is " +
          std::to_string(c.mask.height) + "x" + std::to_string(c.mask.width) +
          ", image is " + std::to_string(request.height) + "x" +
          std::to_string(request.width));
    }
    if (!(c.score >= 0.0 && c.score <= 1.0)) {
      throw ValidationError("mask " + std::to_string(i) +
                            " score outside [0, 1]");
    }
    try {
      mask::validate(c.mask);
    } catch (const CorruptionError& e) {
      throw ValidationError("mask " + std::to_string(i) + ": " + e.what());
    }
  }
}

}  // namespace denseworld::backend
