// SPDX-License-Identifier: Apache-2.0
//
// Built-in responders for mock scripts, so dry runs over synthetic images
// need no per-request fingerprints.
//
//   template          {text}: substitutes {obj}, {id}, {markers}, {count}
//                     from the obj_N references found in the request text.
//   verdict           {reject: [ids], maybe: [ids], yes, no}: answers the
//                     verification question for the first obj_N in the text.
//   color_regions     {background, labels: {"#rrggbb": label}, score,
//                     part_fraction}: every connected region of one exact
//                     color is a mask. Panoptic mode returns labelled regions
//                     (filtered by vocabulary when given); proposal mode
//                     returns all regions unlabelled plus the top
//                     part_fraction of each region as an extra "part" mask.
//   region_at_points  {region_score, box_score, part_score, part_fraction}:
//                     candidates for the region under the first point.
#include "mock_responders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "denseworld/error.hpp"

namespace denseworld::backend::mock {

using nlohmann::json;

namespace {

std::vector<std::uint32_t> referenced_ids(const std::string& text) {
  static const std::regex kObj(R"(obj_(\d+))");
  std::vector<std::uint32_t> ids;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kObj);
       it != std::sregex_iterator(); ++it) {
    ids.push_back(static_cast<std::uint32_t>(std::stoul((*it)[1].str())));
  }
  return ids;
}

std::string replace_all(std::string s, const std::string& from,
                        const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::uint32_t parse_color(const std::string& hex) {
  if (hex.size() != 7 || hex[0] != '#') {
    throw ConfigError("color '" + hex + "' is not #rrggbb");
  }
  return static_cast<std::uint32_t>(std::stoul(hex.substr(1), nullptr, 16));
}

struct Region {
  std::uint32_t color;
  mask::MaskGrid grid;
};

cv::Mat decode_image(const SegmentRequest& req) {
  const std::vector<std::uint8_t> buf(req.image.bytes.begin(),
                                      req.image.bytes.end());
  cv::Mat img = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (img.empty()) throw DecodeError("mock could not decode request image");
  return img;
}

// Connected same-color regions, ordered by color then raster order.
std::vector<Region> color_regions(const cv::Mat& bgr, std::uint32_t background) {
  std::map<std::uint32_t, cv::Mat> by_color;
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      const auto& px = row[x];
      const std::uint32_t rgb = (std::uint32_t(px[2]) << 16) |
                                (std::uint32_t(px[1]) << 8) | px[0];
      if (rgb == background) continue;
      auto& m = by_color[rgb];
      if (m.empty()) m = cv::Mat::zeros(bgr.rows, bgr.cols, CV_8UC1);
      m.at<std::uint8_t>(y, x) = 1;
    }
  }
  std::vector<Region> out;
  for (auto& [color, binary] : by_color) {
    cv::Mat labels;
    const int n = cv::connectedComponents(binary, labels, 8, CV_32S);
    for (int label = 1; label < n; ++label) {
      mask::MaskGrid g(static_cast<std::uint32_t>(bgr.rows),
                       static_cast<std::uint32_t>(bgr.cols));
      for (int y = 0; y < bgr.rows; ++y) {
        const auto* lrow = labels.ptr<int>(y);
        for (int x = 0; x < bgr.cols; ++x) {
          if (lrow[x] == label) g.at(std::uint32_t(y), std::uint32_t(x)) = 1;
        }
      }
      out.push_back({color, std::move(g)});
    }
  }
  return out;
}

// Rows of the region above y0 + ceil(fraction * bbox height); empty grid when
// the region is too short to have a distinct part.
std::optional<mask::MaskGrid> top_part(const mask::MaskGrid& g,
                                       double fraction) {
  if (fraction <= 0.0) return std::nullopt;
  std::uint32_t y0 = g.height, y1 = 0;
  for (std::uint32_t y = 0; y < g.height; ++y)
    for (std::uint32_t x = 0; x < g.width; ++x)
      if (g.at(y, x)) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y + 1);
      }
  if (y1 <= y0 || y1 - y0 < 4) return std::nullopt;
  const auto cut =
      y0 + static_cast<std::uint32_t>(std::ceil(fraction * (y1 - y0)));
  mask::MaskGrid part = g;
  for (std::uint32_t y = cut; y < g.height; ++y)
    for (std::uint32_t x = 0; x < g.width; ++x) part.at(y, x) = 0;
  return part;
}

mask::MaskGrid bounding_box(const mask::MaskGrid& g) {
  const auto r = mask::bbox(mask::rle_encode(g));
  mask::MaskGrid box(g.height, g.width);
  for (auto y = r.y0; y < r.y1; ++y)
    for (auto x = r.x0; x < r.x1; ++x) box.at(y, x) = 1;
  return box;
}

}  // namespace

std::function<ChatResponse(const ChatRequest&)> make_chat_responder(
    const std::string& name, const json& params) {
  if (name == "template") {
    const std::string text = params.at("text").get<std::string>();
    return [text](const ChatRequest& req) {
      const auto ids = referenced_ids(req.joined_text());
      std::set<std::uint32_t> unique(ids.begin(), ids.end());
      std::string markers;
      for (auto id : unique) {
        if (!markers.empty()) markers += ", ";
        markers += "<obj_" + std::to_string(id) + ">";
      }
      std::string out = text;
      out = replace_all(out, "{obj}",
                        ids.empty() ? "the object"
                                    : "obj_" + std::to_string(ids.front()));
      out = replace_all(out, "{id}",
                        ids.empty() ? "" : std::to_string(ids.front()));
      out = replace_all(out, "{markers}", markers);
      out = replace_all(out, "{count}", std::to_string(unique.size()));
      return ChatResponse{out, FinishReason::kStop, {}, 0.0};
    };
  }
  if (name == "verdict") {
    const auto reject = params.value("reject", std::vector<std::uint32_t>{});
    const auto maybe = params.value("maybe", std::vector<std::uint32_t>{});
    const std::string yes = params.value("yes", "Yes, the description matches.");
    const std::string no = params.value("no", "No.");
    return [=](const ChatRequest& req) {
      const auto ids = referenced_ids(req.joined_text());
      std::string out = yes;
      if (!ids.empty()) {
        const auto id = ids.front();
        if (std::find(reject.begin(), reject.end(), id) != reject.end()) out = no;
        if (std::find(maybe.begin(), maybe.end(), id) != maybe.end()) out = "Maybe";
      }
      return ChatResponse{out, FinishReason::kStop, {}, 0.0};
    };
  }
  throw ConfigError("unknown chat responder '" + name + "'");
}

std::function<SegmentResponse(const SegmentRequest&)> make_segment_responder(
    const std::string& name, const json& params) {
  const std::uint32_t background =
      parse_color(params.value("background", std::string("#000000")));
  const double part_fraction = params.value("part_fraction", 0.6);
  if (name == "color_regions") {
    std::map<std::uint32_t, std::string> labels;
    const json label_map = params.value("labels", json::object());
    for (const auto& [hex, label] : label_map.items()) {
      labels[parse_color(hex)] = label.get<std::string>();
    }
    const double score = params.value("score", 0.9);
    return [=](const SegmentRequest& req) {
      const auto regions = color_regions(decode_image(req), background);
      SegmentResponse out;
      if (req.mode == SegmentMode::kPanoptic) {
        const std::set<std::string> vocab(req.vocabulary.begin(),
                                          req.vocabulary.end());
        for (const auto& r : regions) {
          auto it = labels.find(r.color);
          if (it == labels.end()) continue;
          if (!vocab.empty() && !vocab.count(it->second)) continue;
          out.candidates.push_back({mask::rle_encode(r.grid), it->second, score});
        }
        return out;
      }
      for (const auto& r : regions) {
        out.candidates.push_back({mask::rle_encode(r.grid), std::nullopt, score});
      }
      for (const auto& r : regions) {
        if (auto part = top_part(r.grid, part_fraction)) {
          out.candidates.push_back(
              {mask::rle_encode(*part), std::nullopt, score * 0.9});
        }
      }
      return out;
    };
  }
  if (name == "region_at_points") {
    const double region_score = params.value("region_score", 0.95);
    const double box_score = params.value("box_score", 0.8);
    const double part_score = params.value("part_score", 0.7);
    return [=](const SegmentRequest& req) {
      SegmentResponse out;
      if (req.points.empty()) return out;
      const auto& p = req.points.front();
      for (const auto& r : color_regions(decode_image(req), background)) {
        if (!r.grid.at(p.y, p.x)) continue;
        out.candidates.push_back(
            {mask::rle_encode(r.grid), std::nullopt, region_score});
        out.candidates.push_back(
            {mask::rle_encode(bounding_box(r.grid)), std::nullopt, box_score});
        if (auto part = top_part(r.grid, part_fraction)) {
          out.candidates.push_back(
              {mask::rle_encode(*part), std::nullopt, part_score});
        }
        break;
      }
      return out;
    };
  }
  throw ConfigError("unknown segmentation responder '" + name + "'");
}

}  // namespace denseworld::backend::mock
