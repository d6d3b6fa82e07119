// SPDX-License-Identifier: Apache-2.0
#include "denseworld/backend/scripted_mock.hpp"

#include <algorithm>
#include <thread>

#include "denseworld/backend/wire.hpp"
#include "denseworld/error.hpp"
#include "mock_responders.hpp"

namespace denseworld::backend {

using nlohmann::json;

json TranscriptEntry::to_json() const {
  return {{"seq", seq},       {"kind", kind},
          {"role", role},     {"profile", profile},
          {"purpose", purpose}, {"fingerprint", fingerprint},
          {"outcome", outcome}};
}

namespace {

MockFailure parse_failure(const json& j) {
  if (j.is_object()) {
    return {MockFailure::Kind::kStatus, j.at("status").get<int>()};
  }
  const auto s = j.get<std::string>();
  if (s == "transport") return {MockFailure::Kind::kTransport, 0};
  if (s == "timeout") return {MockFailure::Kind::kTimeout, 0};
  if (s == "malformed") return {MockFailure::Kind::kMalformed, 0};
  throw ConfigError("unknown mock failure '" + s + "'");
}

FinishReason parse_finish(const std::string& s) {
  if (s == "stop") return FinishReason::kStop;
  if (s == "length") return FinishReason::kLength;
  if (s == "error") return FinishReason::kError;
  throw ConfigError("unknown finish_reason '" + s + "'");
}

[[noreturn]] void raise(const MockFailure& f, const std::string& profile) {
  switch (f.kind) {
    case MockFailure::Kind::kTransport:
      throw TransportError("mock transport failure on '" + profile + "'");
    case MockFailure::Kind::kTimeout:
      throw TransportError("mock timeout on '" + profile + "'");
    case MockFailure::Kind::kMalformed:
      throw DecodeError("mock malformed body on '" + profile + "'");
    case MockFailure::Kind::kStatus:
      if (f.status == 408 || f.status == 429 || f.status >= 500) {
        throw TransportError("mock HTTP " + std::to_string(f.status));
      }
      throw ProtocolError(f.status, "mock HTTP " + std::to_string(f.status));
  }
  throw TransportError("mock failure");
}

std::string failure_name(const MockFailure& f) {
  switch (f.kind) {
    case MockFailure::Kind::kTransport:
      return "fail:transport";
    case MockFailure::Kind::kTimeout:
      return "fail:timeout";
    case MockFailure::Kind::kMalformed:
      return "fail:malformed";
    case MockFailure::Kind::kStatus:
      return "fail:status_" + std::to_string(f.status);
  }
  return "fail";
}

}  // namespace

std::vector<MockEntry> parse_mock_script(const json& script) {
  std::vector<MockEntry> out;
  try {
    for (const auto& j : script.at("entries")) {
      MockEntry e;
      e.role = parse_role(j.at("role").get<std::string>());
      if (j.contains("fingerprint")) e.fingerprint = j["fingerprint"].get<std::string>();
      if (j.contains("purpose")) e.purpose = j["purpose"].get<std::string>();
      if (j.contains("contains")) e.contains = j["contains"].get<std::string>();
      if (j.contains("times")) e.times = j["times"].get<std::size_t>();
      e.delay = std::chrono::milliseconds(j.value("delay_ms", 0));
      if (j.contains("fail")) e.fail = parse_failure(j["fail"]);
      if (j.contains("text")) {
        ChatResponse r;
        r.text = j["text"].get<std::string>();
        r.finish_reason = parse_finish(j.value("finish_reason", "stop"));
        e.chat = r;
      }
      if (j.contains("masks")) {
        e.segment = wire::parse_segment_response(
            json{{"masks", j["masks"]}}.dump());
      }
      if (j.contains("responder")) {
        const auto name = j["responder"].get<std::string>();
        const json params = j.value("params", json::object());
        if (is_chat_role(e.role)) {
          e.chat_fn = mock::make_chat_responder(name, params);
        } else {
          e.segment_fn = mock::make_segment_responder(name, params);
        }
      }
      if (!e.fail && !e.chat && !e.segment && !e.chat_fn && !e.segment_fn) {
        throw ConfigError("mock entry for role '" +
                          std::string(to_string(e.role)) +
                          "' has no response, failure or responder");
      }
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed mock script: ") + e.what());
  } catch (const DecodeError& e) {
    throw ConfigError(std::string("malformed mock script: ") + e.what());
  }
  return out;
}

ScriptedMock::ScriptedMock(std::vector<MockEntry> script) {
  for (auto& e : script) script_.push_back({std::move(e), 0});
}

void ScriptedMock::add(MockEntry entry) {
  std::lock_guard lock(mu_);
  script_.push_back({std::move(entry), 0});
}

ScriptedMock::Slot* ScriptedMock::match(Role role, const std::string& fp,
                                        const std::string& purpose,
                                        const std::string* text) {
  for (auto& slot : script_) {
    const auto& e = slot.entry;
    if (e.role != role) continue;
    if (e.times && slot.used >= *e.times) continue;
    if (e.fingerprint && *e.fingerprint != fp) continue;
    if (e.purpose && *e.purpose != purpose) continue;
    if (e.contains && (!text || text->find(*e.contains) == std::string::npos)) {
      continue;
    }
    ++slot.used;
    return &slot;
  }
  return nullptr;
}

void ScriptedMock::enter(const std::string& profile) {
  std::lock_guard lock(mu_);
  const auto now = ++in_flight_[profile];
  auto& peak = peak_[profile];
  peak = std::max(peak, now);
}

void ScriptedMock::leave(const std::string& profile) {
  std::lock_guard lock(mu_);
  --in_flight_[profile];
}

void ScriptedMock::record(TranscriptEntry entry) {
  std::lock_guard lock(mu_);
  entry.seq = transcript_.size();
  transcript_.push_back(std::move(entry));
}

namespace {

// Leaves the in-flight count on scope exit.
template <typename Leave>
struct ScopeExit {
  Leave leave;
  ~ScopeExit() { leave(); }
};
template <typename Leave>
ScopeExit(Leave) -> ScopeExit<Leave>;

}  // namespace

ChatResponse ScriptedMock::chat(const BackendProfile& profile,
                                const ChatRequest& request) {
  enter(profile.name);
  ScopeExit guard{[&] { leave(profile.name); }};
  const std::string fp = fingerprint(profile.role, request);
  const std::string text = request.joined_text();
  TranscriptEntry t{0, "chat", std::string(to_string(profile.role)),
                    profile.name, request.purpose, fp, "ok"};
  MockEntry entry;
  {
    std::lock_guard lock(mu_);
    Slot* slot = match(profile.role, fp, request.purpose, &text);
    if (slot) entry = slot->entry;
    else t.outcome = "unscripted";
  }
  if (t.outcome == "unscripted") {
    record(t);
    throw HarnessError("unscripted " + std::string(to_string(profile.role)) +
                       " request (purpose '" + request.purpose +
                       "', fingerprint " + fp + ")");
  }
  if (entry.delay.count() > 0) std::this_thread::sleep_for(entry.delay);
  if (entry.fail) {
    t.outcome = failure_name(*entry.fail);
    record(t);
    raise(*entry.fail, profile.name);
  }
  record(t);
  if (entry.chat_fn) return entry.chat_fn(request);
  if (entry.chat) return *entry.chat;
  throw HarnessError("mock entry for role '" +
                     std::string(to_string(profile.role)) +
                     "' has no chat response");
}

SegmentResponse ScriptedMock::segment(const BackendProfile& profile,
                                      const SegmentRequest& request) {
  enter(profile.name);
  ScopeExit guard{[&] { leave(profile.name); }};
  const std::string fp = fingerprint(profile.role, request);
  TranscriptEntry t{0, "segment", std::string(to_string(profile.role)),
                    profile.name, request.purpose, fp, "ok"};
  MockEntry entry;
  {
    std::lock_guard lock(mu_);
    Slot* slot = match(profile.role, fp, request.purpose, nullptr);
    if (slot) entry = slot->entry;
    else t.outcome = "unscripted";
  }
  if (t.outcome == "unscripted") {
    record(t);
    throw HarnessError("unscripted " + std::string(to_string(profile.role)) +
                       " request (purpose '" + request.purpose +
                       "', fingerprint " + fp + ")");
  }
  if (entry.delay.count() > 0) std::this_thread::sleep_for(entry.delay);
  if (entry.fail) {
    t.outcome = failure_name(*entry.fail);
    record(t);
    raise(*entry.fail, profile.name);
  }
  record(t);
  if (entry.segment_fn) return entry.segment_fn(request);
  if (entry.segment) return *entry.segment;
  throw HarnessError("mock entry for role '" +
                     std::string(to_string(profile.role)) +
                     "' has no segmentation response");
}

std::vector<TranscriptEntry> ScriptedMock::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

std::string ScriptedMock::canonical_transcript() const {
  std::vector<std::string> lines;
  for (auto entry : transcript()) {
    json j = entry.to_json();
    j.erase("seq");
    lines.push_back(j.dump());
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::size_t ScriptedMock::peak_in_flight(const std::string& profile) const {
  std::lock_guard lock(mu_);
  auto it = peak_.find(profile);
  return it == peak_.end() ? 0 : it->second;
}

std::size_t ScriptedMock::count(std::string_view purpose) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(transcript_.begin(), transcript_.end(),
                    [&](const TranscriptEntry& t) { return t.purpose == purpose; }));
}

}  // namespace denseworld::backend
