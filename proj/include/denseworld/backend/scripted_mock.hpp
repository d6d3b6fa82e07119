// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "denseworld/backend/transport.hpp"

namespace denseworld::backend {

struct MockFailure {
  enum class Kind { kTransport, kTimeout, kStatus, kMalformed };
  Kind kind = Kind::kTransport;
  int status = 0;  // for kStatus
};

// One scripted answer. A request matches when the role agrees and every set
// selector (fingerprint, purpose, substring of the request text) agrees.
// Entries are tried in script order; `times` bounds how often an entry can
// answer (unset means unlimited).
struct MockEntry {
  Role role = Role::kCaptioner;
  std::optional<std::string> fingerprint;
  std::optional<std::string> purpose;
  std::optional<std::string> contains;
  std::optional<std::size_t> times;
  std::chrono::milliseconds delay{0};

  std::optional<MockFailure> fail;
  std::optional<ChatResponse> chat;
  std::optional<SegmentResponse> segment;
  std::function<ChatResponse(const ChatRequest&)> chat_fn;
  std::function<SegmentResponse(const SegmentRequest&)> segment_fn;
};

struct TranscriptEntry {
  std::size_t seq = 0;
  std::string kind;  // "chat" | "segment"
  std::string role;
  std::string profile;
  std::string purpose;
  std::string fingerprint;
  std::string outcome;  // "ok" | "fail:<kind>" | "unscripted"

  nlohmann::json to_json() const;
};

// Parses the JSON script format:
//   {"entries": [{"role": "...", "fingerprint"?, "purpose"?, "contains"?,
//                 "times"?, "delay_ms"?,
//                 "fail"?: "transport"|"timeout"|"malformed"|{"status": N},
//                 "text"?, "finish_reason"?, "masks"?: [{rle,label,score}],
//                 "responder"?: name, "params"?: {...}}]}
// Built-in responders: "template", "verdict" (chat); "color_regions",
// "region_at_points" (segmentation). See scripted_mock.cpp.
std::vector<MockEntry> parse_mock_script(const nlohmann::json& script);

// Deterministic Transport for tests and dry runs. Records every request and
// tracks per-profile concurrency.
class ScriptedMock final : public Transport {
 public:
  ScriptedMock() = default;
  explicit ScriptedMock(std::vector<MockEntry> script);

  void add(MockEntry entry);

  ChatResponse chat(const BackendProfile& profile,
                    const ChatRequest& request) override;
  SegmentResponse segment(const BackendProfile& profile,
                          const SegmentRequest& request) override;

  std::vector<TranscriptEntry> transcript() const;
  // Transcript sorted by content (seq dropped) so concurrent runs compare
  // equal; one JSON object per line.
  std::string canonical_transcript() const;
  std::size_t peak_in_flight(const std::string& profile) const;
  std::size_t count(std::string_view purpose) const;

 private:
  struct Slot {
    MockEntry entry;
    std::size_t used = 0;
  };
  Slot* match(Role role, const std::string& fp, const std::string& purpose,
              const std::string* text);
  void enter(const std::string& profile);
  void leave(const std::string& profile);
  void record(TranscriptEntry entry);

  mutable std::mutex mu_;
  std::vector<Slot> script_;
  std::vector<TranscriptEntry> transcript_;
  std::map<std::string, std::size_t> in_flight_;
  std::map<std::string, std::size_t> peak_;
};

}  // namespace denseworld::backend
