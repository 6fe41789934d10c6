// Copyright 2026 The foodseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "foodseg/raster.hpp"

#include <algorithm>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "foodseg/errors.hpp"

namespace foodseg {

BinaryMask::BinaryMask(int rows, int cols, std::uint8_t fill)
    : rows_(rows), cols_(cols), bits_(static_cast<std::size_t>(rows) * cols, fill ? 1 : 0) {
  require(rows >= 0 && cols >= 0, "BinaryMask: negative dimensions");
}

BinaryMask::BinaryMask(int rows, int cols, std::vector<std::uint8_t> bits)
    : rows_(rows), cols_(cols), bits_(std::move(bits)) {
  require(rows >= 0 && cols >= 0, "BinaryMask: negative dimensions");
  require(bits_.size() == static_cast<std::size_t>(rows) * cols,
          "BinaryMask: bit count does not match dimensions");
  for (auto& b : bits_) b = b ? 1 : 0;
}

BinaryMask BinaryMask::from_mat(const cv::Mat& mat) {
  require(mat.channels() == 1, "BinaryMask::from_mat expects a single-channel image");
  cv::Mat u8;
  if (mat.depth() == CV_8U) {
    u8 = mat;
  } else {
    u8 = mat != 0;
  }
  BinaryMask out(u8.rows, u8.cols);
  for (int y = 0; y < u8.rows; ++y) {
    const auto* row = u8.ptr<std::uint8_t>(y);
    for (int x = 0; x < u8.cols; ++x) out.set(y, x, row[x] != 0);
  }
  return out;
}

BinaryMask BinaryMask::from_label(const cv::Mat& label_map, int class_id) {
  require(label_map.type() == CV_8UC1, "BinaryMask::from_label expects a CV_8UC1 label map");
  BinaryMask out(label_map.rows, label_map.cols);
  for (int y = 0; y < label_map.rows; ++y) {
    const auto* row = label_map.ptr<std::uint8_t>(y);
    for (int x = 0; x < label_map.cols; ++x) out.set(y, x, row[x] == class_id);
  }
  return out;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

cv::Mat BinaryMask::to_mat(std::uint8_t on_value) const {
  cv::Mat out(rows_, cols_, CV_8UC1);
  for (int y = 0; y < rows_; ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < cols_; ++x) row[x] = at(y, x) ? on_value : 0;
  }
  return out;
}

cv::Mat read_color_image(const std::filesystem::path& path) {
  cv::Mat image = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (image.empty()) throw DecodeError("cannot decode image: " + path.string());
  return image;
}

cv::Mat read_label_map(const std::filesystem::path& path) {
  cv::Mat labels = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (labels.empty()) throw DecodeError("cannot decode mask: " + path.string());
  if (labels.channels() != 1) {
    throw DecodeError("mask is not single-channel: " + path.string());
  }
  if (labels.depth() != CV_8U) {
    throw DecodeError("mask is not 8-bit: " + path.string());
  }
  return labels;
}

cv::Mat decode_color_image(const std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) throw DecodeError("empty image buffer");
  cv::Mat image = cv::imdecode(bytes, cv::IMREAD_COLOR);
  if (image.empty()) throw DecodeError("cannot decode image buffer");
  return image;
}

std::vector<std::uint8_t> encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", image, out)) throw std::runtime_error("PNG encoding failed");
  return out;
}

void write_png(const std::filesystem::path& path, const cv::Mat& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace foodseg
