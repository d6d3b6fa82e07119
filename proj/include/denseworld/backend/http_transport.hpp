// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>

#include "denseworld/backend/transport.hpp"

namespace denseworld::backend {

struct EndpointUrl {
  std::string scheme_host_port;  // "http://host:8000"
  std::string base_path;         // "" or "/prefix", no trailing slash
};

// Throws ConfigError for anything other than http(s)://host[:port][/path].
EndpointUrl parse_endpoint(const std::string& endpoint);

// Real network transport. Bearer tokens come from DG_API_KEY_{NAME}; a
// custom lookup can replace the environment for tests.
class HttpTransport final : public Transport {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  HttpTransport();
  explicit HttpTransport(EnvLookup env);

  ChatResponse chat(const BackendProfile& profile,
                    const ChatRequest& request) override;
  SegmentResponse segment(const BackendProfile& profile,
                          const SegmentRequest& request) override;

 private:
  std::string post(const BackendProfile& profile, std::string_view path,
                   const std::string& body);

  EnvLookup env_;
};

}  // namespace denseworld::backend
