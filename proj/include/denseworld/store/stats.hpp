// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "denseworld/store/record.hpp"

namespace denseworld::store {

struct TextCounts {
  std::uint64_t chars = 0;      // Unicode scalar values
  std::uint64_t words = 0;      // maximal runs of non-whitespace
  std::uint64_t sentences = 0;  // runs of '.', '!', '?'
  bool operator==(const TextCounts&) const = default;
};

// Counts after removing every <obj_N> marker. Whitespace is ASCII space,
// tab, newline, carriage return, vertical tab and form feed.
TextCounts count_text(std::string_view text);

struct CaptionStats {
  std::uint64_t samples = 0;
  double mean_chars = 0.0;
  double mean_words = 0.0;
  double mean_sentences = 0.0;
};

enum class StatsLevel { kScene, kObject };
StatsLevel parse_stats_level(std::string_view text);  // throws UsageError

CaptionStats caption_stats(const std::vector<std::string>& texts);

// Scene level: every non-empty scene caption. Object level: the detailed
// text of every verified object caption.
CaptionStats compute_stats(const std::vector<GroundedSceneRecord>& records,
                           StatsLevel level);

// Fixed-width table with columns Level, Samples, Char., Word, Sen.
std::string render_stats_table(
    const std::vector<std::pair<std::string, CaptionStats>>& rows);

}  // namespace denseworld::store
