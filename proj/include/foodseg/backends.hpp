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

// Concrete PromptableSegmenter bindings.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "foodseg/segmenter.hpp"

namespace foodseg {

/// Deterministic stand-in for a promptable model: the 4-connected region
/// of pixels whose color stays within `tolerance` (max abs channel
/// difference) of the pixel under the prompt. One candidate per tolerance,
/// in the given order, with scores descending in that order.
class RegionGrowSegmenter final : public PromptableSegmenter {
 public:
  explicit RegionGrowSegmenter(std::vector<int> tolerances = {32, 16, 64});

  std::string name() const override { return "region-grow"; }
  std::vector<ScoredMask> propose(const cv::Mat& image, cv::Point point, bool want_multi, int k) override;

 private:
  std::vector<int> tolerances_;
};

/// Connected component of equal-valued pixels around `seed` in a
/// single-channel or color image, 4-connectivity.
BinaryMask connected_component(const cv::Mat& image, cv::Point seed, int tolerance);

/// Oracle backend: looks up the ground-truth label map registered for the
/// exact image and returns the full region of the class under the prompt.
class GroundTruthSegmenter final : public PromptableSegmenter {
 public:
  void add(const cv::Mat& image, const cv::Mat& label_map);

  std::string name() const override { return "ground-truth"; }
  std::vector<ScoredMask> propose(const cv::Mat& image, cv::Point point, bool want_multi, int k) override;

 private:
  std::map<std::uint64_t, cv::Mat> by_content_;
};

/// Content hash of an image's pixel bytes and geometry.
std::uint64_t image_content_hash(const cv::Mat& image);

/// Remote backend speaking a small HTTP protocol, e.g. a Python process
/// hosting a large promptable checkpoint on a GPU host.
///
///   POST {base}/propose  multipart/form-data
///     image   : PNG bytes
///     request : {"x": int, "y": int, "multimask": bool, "k": int}
///   200 -> {"masks": [{"rle": {"size": [h, w], "counts": [...]}, "score": float}, ...]}
class HttpSegmenter final : public PromptableSegmenter {
 public:
  /// `base_url` such as "http://127.0.0.1:8765".
  explicit HttpSegmenter(std::string base_url, int timeout_seconds = 120);

  std::string name() const override { return "http:" + base_url_; }
  std::vector<ScoredMask> propose(const cv::Mat& image, cv::Point point, bool want_multi, int k) override;

 private:
  std::string base_url_;
  int timeout_seconds_;
};

/// Parses "region-grow", "region-grow:16,32", "http://host:port".
std::unique_ptr<PromptableSegmenter> make_segmenter(const std::string& descriptor);

}  // namespace foodseg
