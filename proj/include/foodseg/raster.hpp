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

// Raster value types shared by every stage. Color images travel as
// cv::Mat (CV_8UC3, BGR as decoded by OpenCV); label maps as CV_8UC1
// class-id images; binary masks use the dedicated BinaryMask type so
// metrics and serialization stay independent of OpenCV.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

namespace foodseg {

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int rows, int cols, std::uint8_t fill = 0);
  BinaryMask(int rows, int cols, std::vector<std::uint8_t> bits);

  /// Nonzero pixels of a single-channel image become foreground.
  static BinaryMask from_mat(const cv::Mat& mat);
  /// Pixels of `label_map` equal to `class_id`.
  static BinaryMask from_label(const cv::Mat& label_map, int class_id);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return bits_.size(); }
  bool same_shape(const BinaryMask& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::uint8_t at(int y, int x) const { return bits_[static_cast<std::size_t>(y) * cols_ + x]; }
  void set(int y, int x, bool on) { bits_[static_cast<std::size_t>(y) * cols_ + x] = on ? 1 : 0; }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t count() const;
  bool none() const { return count() == 0; }

  /// CV_8UC1 with foreground = `on_value`.
  cv::Mat to_mat(std::uint8_t on_value = 255) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Planar float tensor (C x H x W), the classifier's input format.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

/// Loads a color image; throws DecodeError on unreadable or corrupt files.
cv::Mat read_color_image(const std::filesystem::path& path);
/// Loads a single-channel label image without palette expansion.
cv::Mat read_label_map(const std::filesystem::path& path);
/// Decodes an in-memory encoded image (PNG/JPEG); throws DecodeError.
cv::Mat decode_color_image(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const cv::Mat& image);
void write_png(const std::filesystem::path& path, const cv::Mat& image);

}  // namespace foodseg
