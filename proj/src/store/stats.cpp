// SPDX-License-Identifier: Apache-2.0
#include "denseworld/store/stats.hpp"

#include <fmt/format.h>

#include "denseworld/error.hpp"
#include "denseworld/stage3/scene_caption.hpp"

namespace denseworld::store {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

TextCounts count_text(std::string_view raw) {
  const std::string text = stage3::strip_markers(std::string(raw));
  TextCounts t;
  bool in_word = false, in_run = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c & 0xC0) != 0x80) ++t.chars;
    const bool space = is_space(c);
    if (!space && !in_word) ++t.words;
    in_word = !space;
    const bool term = is_terminator(ch);
    if (term && !in_run) ++t.sentences;
    in_run = term;
  }
  return t;
}

StatsLevel parse_stats_level(std::string_view text) {
  if (text == "scene") return StatsLevel::kScene;
  if (text == "object") return StatsLevel::kObject;
  throw UsageError("level must be 'scene' or 'object'");
}

CaptionStats caption_stats(const std::vector<std::string>& texts) {
  CaptionStats s;
  std::uint64_t chars = 0, words = 0, sentences = 0;
  for (const auto& t : texts) {
    const auto c = count_text(t);
    chars += c.chars;
    words += c.words;
    sentences += c.sentences;
  }
  s.samples = texts.size();
  if (s.samples == 0) return s;
  const auto n = static_cast<double>(s.samples);
  s.mean_chars = static_cast<double>(chars) / n;
  s.mean_words = static_cast<double>(words) / n;
  s.mean_sentences = static_cast<double>(sentences) / n;
  return s;
}

CaptionStats compute_stats(const std::vector<GroundedSceneRecord>& records,
                           StatsLevel level) {
  std::vector<std::string> texts;
  for (const auto& r : records) {
    if (level == StatsLevel::kScene) {
      if (!r.scene_caption.text.empty()) texts.push_back(r.scene_caption.text);
    } else {
      for (const auto& c : r.object_captions) {
        if (c.verified && !c.detailed.empty()) texts.push_back(c.detailed);
      }
    }
  }
  return caption_stats(texts);
}

std::string render_stats_table(
    const std::vector<std::pair<std::string, CaptionStats>>& rows) {
  std::string out = fmt::format("{:<10}{:>9}{:>10}{:>9}{:>7}\n", "Level",
                                "Samples", "Char.", "Word", "Sen.");
  for (const auto& [label, s] : rows) {
    out += fmt::format("{:<10}{:>9}{:>10.1f}{:>9.1f}{:>7.1f}\n", label, s.samples,
                       s.mean_chars, s.mean_words, s.mean_sentences);
  }
  return out;
}

}  // namespace denseworld::store
