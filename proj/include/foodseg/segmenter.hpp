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

// Point-prompted mask generation on top of a pluggable promptable
// segmentation backend.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "foodseg/cam.hpp"
#include "foodseg/errors.hpp"
#include "foodseg/raster.hpp"

namespace foodseg {

enum class InputMode { kOriginal, kSmoothed };
enum class MaskStrategy { kSingle, kMulti };

std::string to_string(InputMode mode);
std::string to_string(MaskStrategy strategy);
InputMode parse_input_mode(const std::string& text);
MaskStrategy parse_mask_strategy(const std::string& text);

struct SegmenterConfig {
  InputMode input_mode = InputMode::kOriginal;
  double blur_sigma = 10.0;
  MaskStrategy mask_strategy = MaskStrategy::kMulti;
  int k_proposals = 3;

  void validate() const;
};

nlohmann::json to_json(const SegmenterConfig& cfg);
SegmenterConfig segmenter_config_from_json(const nlohmann::json& j);

struct ScoredMask {
  BinaryMask mask;
  double score = 0.0;
};

/// Adapter over a promptable segmentation model. Implementations need not
/// be thread-safe; callers serialize calls per instance.
class PromptableSegmenter {
 public:
  virtual ~PromptableSegmenter() = default;
  virtual std::string name() const = 0;
  /// Masks for a single positive point at (x, y). With want_multi the
  /// backend may return up to k candidates; otherwise at most one.
  virtual std::vector<ScoredMask> propose(const cv::Mat& image, cv::Point point, bool want_multi, int k) = 0;
};

struct MaskProposalSet {
  std::string image_id;
  int class_id = 0;
  PointPrompt prompt;
  std::vector<BinaryMask> masks;
  std::vector<double> scores;

  double top_score() const;
};

nlohmann::json to_json(const MaskProposalSet& set);
MaskProposalSet proposal_set_from_json(const nlohmann::json& j);

/// Separable gaussian with radius ceil(4 sigma) and symmetric (edge
/// repeating) reflection at the borders. Accepts CV_8U or CV_32F/CV_64F
/// images with any channel count; the output keeps the input type.
cv::Mat gaussian_blur(const cv::Mat& image, double sigma);

/// Normalized 1-D taps for `gaussian_blur`, length 2*ceil(4 sigma)+1.
std::vector<double> gaussian_kernel(double sigma);

/// Queries the backend's candidate masks at the prompt and merges them by
/// per-pixel majority (mean >= 0.5). Score is the mean backend score.
/// std::nullopt signals EmptyProposal.
std::optional<MaskProposalSet> segment_single(const cv::Mat& image, const std::string& image_id,
                                              const PointPrompt& prompt, PromptableSegmenter& backend, int k);

/// Up to k backend masks ordered by descending score, unmodified.
/// std::nullopt signals EmptyProposal.
std::optional<MaskProposalSet> segment_multi(const cv::Mat& image, const std::string& image_id,
                                             const PointPrompt& prompt, PromptableSegmenter& backend, int k);

/// Per-pixel majority of equally weighted masks (ties count as foreground).
BinaryMask majority_mask(std::span<const BinaryMask> masks);

struct SegmentationResult {
  std::vector<MaskProposalSet> sets;
  std::vector<std::pair<int, SkipReason>> skipped;  // (class_id, reason)
};

/// Segments every prompt of one image. Prompts must come from CAMs of the
/// original image; in smoothed mode only the backend input is blurred, once.
SegmentationResult run_segmentation(const cv::Mat& image, const std::string& image_id,
                                    std::span<const PointPrompt> prompts, const SegmenterConfig& cfg,
                                    PromptableSegmenter& backend);

/// The image the backend sees under `cfg`.
cv::Mat backend_input(const cv::Mat& image, const SegmenterConfig& cfg);

}  // namespace foodseg
