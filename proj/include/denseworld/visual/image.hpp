// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <opencv2/core.hpp>

namespace denseworld::visual {

// An input image: 8-bit BGR pixels plus the identity used in records.
struct Image {
  std::string id;
  std::string uri;
  cv::Mat bgr;      // CV_8UC3
  std::string png;  // encoded bgr, the form sent to backends

  std::uint32_t height() const { return static_cast<std::uint32_t>(bgr.rows); }
  std::uint32_t width() const { return static_cast<std::uint32_t>(bgr.cols); }
};

// Loads any format OpenCV reads as 3-channel BGR. The id is the file stem.
// Throws DecodeError when the file is missing or unreadable.
Image load_image(const std::filesystem::path& path);

Image make_image(std::string id, std::string uri, cv::Mat bgr);

// PNG bytes of a BGR image, as sent to backends.
std::string encode_png(const cv::Mat& bgr);
cv::Mat decode_png(const std::string& bytes);
void write_png(const std::filesystem::path& path, const cv::Mat& bgr);

}  // namespace denseworld::visual
