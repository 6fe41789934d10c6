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

// Training-time augmentation and inference preprocessing.
//
// The stages run in a fixed order: resized crop, flips, color jitter,
// affine, 3x3 gaussian blur, random erasing. Every random draw comes from
// one engine seeded per sample, so a (sample, seed) pair always yields
// the same tensor.

#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "foodseg/dataset.hpp"
#include "foodseg/raster.hpp"

namespace foodseg {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ColorJitter {
  double brightness = 0.20;  // factor drawn from [1-b, 1+b]
  double contrast = 0.20;
  double saturation = 0.15;
  double hue = 0.10;  // shift as a fraction of the hue circle, [-h, h]
};

struct AffineJitter {
  double max_rotation_deg = 30.0;
  double max_translate = 0.10;  // fraction of width / height
  Range scale{0.90, 1.10};
};

struct BlurJitter {
  int kernel = 3;
  Range sigma{0.001, 2.0};
};

struct RandomErase {
  double p = 0.3;
  Range area{0.02, 0.10};
  Range aspect{0.3, 3.3};
};

struct AugmentationConfig {
  Range crop_scale{0.8, 1.0};
  int crop_size = 384;
  double hflip_p = 0.5;
  double vflip_p = 0.5;
  ColorJitter jitter;
  AffineJitter affine;
  BlurJitter blur;
  RandomErase erase;

  /// Throws ConfigError on out-of-domain probabilities or empty ranges.
  void validate() const;

  /// Only the resize to crop_size remains; everything else is a no-op.
  static AugmentationConfig identity(int crop_size);
};

nlohmann::json to_json(const AugmentationConfig& cfg);
AugmentationConfig augmentation_from_json(const nlohmann::json& j);

/// ImageNet channel statistics used by the classifier input normalization.
inline constexpr float kChannelMean[3] = {0.485f, 0.456f, 0.406f};
inline constexpr float kChannelStd[3] = {0.229f, 0.224f, 0.225f};

/// BGR8 image -> normalized RGB planar tensor, no resizing.
ImageTensor to_tensor(const cv::Mat& bgr);
/// Bilinear resize to resolution x resolution, then normalize.
ImageTensor preprocess(const cv::Mat& bgr, int resolution);

/// Produces a crop_size x crop_size normalized tensor. The label vector of
/// `image` is never touched.
ImageTensor augment(const LabeledImage& image, const AugmentationConfig& cfg, std::uint64_t seed);

namespace augment_ops {

// Individual stages. All operate on CV_32FC3 RGB images in [0, 1].

cv::Mat random_resized_crop(const cv::Mat& rgb, Range scale, int size, std::mt19937_64& rng);
cv::Mat hflip(const cv::Mat& rgb);
cv::Mat vflip(const cv::Mat& rgb);
cv::Mat color_jitter(const cv::Mat& rgb, const ColorJitter& jitter, std::mt19937_64& rng);
cv::Mat random_affine(const cv::Mat& rgb, const AffineJitter& affine, std::mt19937_64& rng);
cv::Mat random_blur(const cv::Mat& rgb, const BlurJitter& blur, std::mt19937_64& rng);
/// Erases in normalized space: the region becomes the channel mean.
void random_erase(ImageTensor& tensor, const RandomErase& erase, std::mt19937_64& rng);

}  // namespace augment_ops

}  // namespace foodseg
