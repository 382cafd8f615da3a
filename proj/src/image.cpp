// Copyright 2026 The Smiledesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "smile/image.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "smile/error.hpp"

namespace smile {

Image::Image(int width, int height) : Image(width, height, {}) {}

Image::Image(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive",
                {{"width", width}, {"height", height}});
  }
  const auto expected = static_cast<std::size_t>(width) * height * kChannels;
  if (data_.empty()) {
    data_.assign(expected, 0);
  } else if (data_.size() != expected) {
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer size does not match dimensions",
                {{"expected", expected}, {"actual", data_.size()}});
  }
}

namespace {

cv::Mat to_bgr_mat(const Image& image) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  const auto src = image.bytes();
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<std::uint8_t>(y);
    const auto* in = src.data() + static_cast<std::size_t>(y) * image.width() * 3;
    for (int x = 0; x < image.width(); ++x) {
      row[3 * x + 0] = in[3 * x + 2];
      row[3 * x + 1] = in[3 * x + 1];
      row[3 * x + 2] = in[3 * x + 0];
    }
  }
  return bgr;
}

std::vector<std::uint8_t> encode_with(const Image& image, const std::string& ext,
                                      const std::vector<int>& params) {
  if (image.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty image");
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(ext, to_bgr_mat(image), out, params)) {
    throw Error(ErrorCode::kInternal, "image encoding failed", {{"format", ext}});
  }
  return out;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> encoded) {
  if (encoded.empty()) {
    throw Error(ErrorCode::kUndecodableImage, "empty image payload");
  }
  cv::Mat buf(1, static_cast<int>(encoded.size()), CV_8UC1,
              const_cast<std::uint8_t*>(encoded.data()));
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kUndecodableImage, std::string("image decoding failed: ") + e.what());
  }
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw Error(ErrorCode::kUndecodableImage, "payload is not a PNG or JPEG image");
  }
  Image image(bgr.cols, bgr.rows);
  auto dst = image.bytes();
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<std::uint8_t>(y);
    auto* out = dst.data() + static_cast<std::size_t>(y) * bgr.cols * 3;
    for (int x = 0; x < bgr.cols; ++x) {
      out[3 * x + 0] = row[3 * x + 2];
      out[3 * x + 1] = row[3 * x + 1];
      out[3 * x + 2] = row[3 * x + 0];
    }
  }
  return image;
}

Image read_image_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound, "cannot open image file", {{"path", path}});
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  return encode_with(image, ".png", {cv::IMWRITE_PNG_COMPRESSION, 6});
}

std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality) {
  return encode_with(image, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

void write_image_file(const std::string& path, const Image& image) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  std::vector<std::uint8_t> bytes;
  if (ext == ".png") {
    bytes = encode_png(image);
  } else if (ext == ".jpg" || ext == ".jpeg") {
    bytes = encode_jpeg(image);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unsupported image extension", {{"path", path}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::kStorageFailure, "cannot write image file", {{"path", path}});
  }
}

}  // namespace smile
