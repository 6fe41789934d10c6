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

// Gradient-weighted class activation maps at the classifier's final
// normalization layer, and the point prompt taken from their peak.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "foodseg/model.hpp"

namespace foodseg {

struct ClassActivationMap {
  int class_id = 0;
  cv::Mat grid;  // CV_32FC1 at source image resolution, values in [0, 1]
  float raw_peak = 0.0f;  // maximum of the token-level map before normalization
};

struct PointPrompt {
  int class_id = 0;
  int x = 0;  // column
  int y = 0;  // row
  float activation = 0.0f;

  friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

/// Throws CapabilityError when the model's backbone cannot expose
/// activations and gradients at its final normalization layer.
void require_cam_support(const MultiLabelClassifier& model);

/// One forward pass, then one map per requested class. Each map is
/// ReLU(sum_d alpha_d * A_d) with alpha the token-mean gradient of the
/// class logit, reshaped row-major to the token grid, bilinearly upsampled
/// to the image size and divided by its maximum when positive.
std::vector<ClassActivationMap> compute_cams(const cv::Mat& image, const MultiLabelClassifier& model,
                                             std::span<const int> class_ids);
ClassActivationMap compute_cam(const cv::Mat& image, const MultiLabelClassifier& model, int class_id);

/// Global maximum with row-major tie-break (smallest row, then smallest
/// column). std::nullopt signals NoActivation: the map has no positive value.
std::optional<PointPrompt> select_prompt(const ClassActivationMap& cam);

/// Half-pixel-centered bilinear resize of a CV_32FC1 grid, edges clamped.
cv::Mat upsample_bilinear(const cv::Mat& grid, int rows, int cols);

/// (rows, cols) of a row-major token grid holding `token_count` tokens for
/// an image with the given aspect (width / height).
std::pair<int, int> infer_token_grid(int token_count, double aspect);

/// Writes {image_id}.{class_id}.cam.png (8-bit grayscale) and a
/// {image_id}.{class_id}.cam.json sidecar with the prompt, if any.
void write_cam_dump(const std::filesystem::path& dir, const std::string& image_id, const ClassActivationMap& cam,
                    const std::optional<PointPrompt>& prompt);

std::string cam_file_stem(const std::string& image_id, int class_id);

}  // namespace foodseg
