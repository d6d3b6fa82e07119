// SPDX-License-Identifier: Apache-2.0
#include "denseworld/backend/http_transport.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "denseworld/backend/wire.hpp"
#include "denseworld/error.hpp"

namespace denseworld::backend {

EndpointUrl parse_endpoint(const std::string& endpoint) {
  static const std::regex kUrl(R"(^(https?://[^/\s]+)(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, kUrl)) {
    throw ConfigError("endpoint '" + endpoint +
                      "' is not an http(s) URL");
  }
  EndpointUrl out{m[1].str(), m[2].matched ? m[2].str() : std::string()};
  while (!out.base_path.empty() && out.base_path.back() == '/') {
    out.base_path.pop_back();
  }
  return out;
}

HttpTransport::HttpTransport()
    : env_([](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
      }) {}

HttpTransport::HttpTransport(EnvLookup env) : env_(std::move(env)) {}

std::string HttpTransport::post(const BackendProfile& profile,
                                std::string_view path,
                                const std::string& body) {
  const EndpointUrl url = parse_endpoint(profile.endpoint);
  httplib::Client cli(url.scheme_host_port);
  const auto seconds = static_cast<time_t>(profile.timeout_seconds);
  const auto micros = static_cast<time_t>(
      (profile.timeout_seconds - static_cast<double>(seconds)) * 1e6);
  cli.set_connection_timeout(seconds, micros);
  cli.set_read_timeout(seconds, micros);
  cli.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (auto key = env_(api_key_variable(profile)); key && !key->empty()) {
    headers.emplace("Authorization", "Bearer " + *key);
  }
  const std::string full_path = url.base_path + std::string(path);
  auto res = cli.Post(full_path, headers, body, "application/json");
  if (!res) {
    throw TransportError("POST " + profile.endpoint + std::string(path) +
                         ": " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status >= 200 && status < 300) return res->body;
  const std::string what = "POST " + profile.endpoint + std::string(path) +
                           " returned HTTP " + std::to_string(status);
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError(what);
  }
  throw ProtocolError(status, what);
}

ChatResponse HttpTransport::chat(const BackendProfile& profile,
                                 const ChatRequest& request) {
  const auto body = wire::chat_request_body(profile, request).dump();
  return wire::parse_chat_response(post(profile, wire::kChatPath, body));
}

SegmentResponse HttpTransport::segment(const BackendProfile& profile,
                                       const SegmentRequest& request) {
  const auto body = wire::segment_request_body(request).dump();
  return wire::parse_segment_response(post(profile, wire::kSegmentPath, body));
}

}  // namespace denseworld::backend
