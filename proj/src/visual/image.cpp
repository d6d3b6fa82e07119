// SPDX-License-Identifier: Apache-2.0
#include "denseworld/visual/image.hpp"

#include <vector>

#include <opencv2/imgcodecs.hpp>

#include "denseworld/error.hpp"

namespace denseworld::visual {

Image load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw DecodeError("cannot read image '" + path.string() + "'");
  }
  return make_image(path.stem().string(), path.string(), std::move(bgr));
}

Image make_image(std::string id, std::string uri, cv::Mat bgr) {
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw DimensionError("image '" + id + "' is not 8-bit 3-channel");
  }
  std::string png = encode_png(bgr);
  return Image{std::move(id), std::move(uri), std::move(bgr), std::move(png)};
}

std::string encode_png(const cv::Mat& bgr) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", bgr, buf)) {
    throw DecodeError("PNG encoding failed");
  }
  return std::string(buf.begin(), buf.end());
}

cv::Mat decode_png(const std::string& bytes) {
  const std::vector<std::uint8_t> buf(bytes.begin(), bytes.end());
  cv::Mat img = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (img.empty()) throw DecodeError("image bytes could not be decoded");
  return img;
}

void write_png(const std::filesystem::path& path, const cv::Mat& bgr) {
  if (!cv::imwrite(path.string(), bgr)) {
    throw Error("cannot write '" + path.string() + "'");
  }
}

}  // namespace denseworld::visual
