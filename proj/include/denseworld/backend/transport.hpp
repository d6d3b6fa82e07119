// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "denseworld/backend/messages.hpp"
#include "denseworld/backend/profile.hpp"

namespace denseworld::backend {

// One attempt against one backend. Implementations throw TransportError for
// failures worth retrying and ProtocolError / DecodeError otherwise.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ChatResponse chat(const BackendProfile& profile,
                            const ChatRequest& request) = 0;
  virtual SegmentResponse segment(const BackendProfile& profile,
                                  const SegmentRequest& request) = 0;
};

// Stable SHA-256 over the role and the request content. Image parts enter by
// digest; latency and other per-call values are not part of a request.
std::string fingerprint(Role role, const ChatRequest& request);
std::string fingerprint(Role role, const SegmentRequest& request);

}  // namespace denseworld::backend
