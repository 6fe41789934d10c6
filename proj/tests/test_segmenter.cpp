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

#include <random>

#include <gtest/gtest.h>

#include "foodseg/errors.hpp"
#include "foodseg/segmenter.hpp"

namespace foodseg {
namespace {

// Returns a fixed list of masks and records every image it was shown.
class FixedBackend final : public PromptableSegmenter {
 public:
  explicit FixedBackend(std::vector<ScoredMask> masks) : masks_(std::move(masks)) {}
  std::string name() const override { return "fixed"; }
  std::vector<ScoredMask> propose(const cv::Mat& image, cv::Point point, bool, int) override {
    seen.push_back(image.clone());
    points.push_back(point);
    return masks_;
  }
  std::vector<cv::Mat> seen;
  std::vector<cv::Point> points;

 private:
  std::vector<ScoredMask> masks_;
};

BinaryMask row_mask(std::initializer_list<int> bits) {
  return BinaryMask(1, static_cast<int>(bits.size()), std::vector<std::uint8_t>(bits.begin(), bits.end()));
}

PointPrompt prompt_at(int x, int y, int class_id = 1) { return {class_id, x, y, 1.0f}; }

TEST(Blur, KernelIsNormalizedWithFourSigmaRadius) {
  const auto taps = gaussian_kernel(1.5);
  EXPECT_EQ(taps.size(), 2u * 6 + 1);
  double sum = 0.0;
  for (double t : taps) sum += t;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_EQ(taps.front(), taps.back());
}

TEST(Blur, ConstantImageUnchanged) {
  cv::Mat img(20, 30, CV_8UC3, cv::Scalar(12, 200, 77));
  EXPECT_EQ(cv::norm(gaussian_blur(img, 10.0), img, cv::NORM_INF), 0.0);
}

TEST(Blur, KeepsTypeAndShape) {
  cv::Mat img(9, 7, CV_32FC1, cv::Scalar(0));
  img.at<float>(4, 3) = 1.0f;
  const cv::Mat out = gaussian_blur(img, 1.0);
  EXPECT_EQ(out.type(), CV_32FC1);
  EXPECT_EQ(out.size(), img.size());
  EXPECT_NEAR(cv::sum(out)[0], 1.0, 1e-5);
}

TEST(Majority, ThresholdAtHalf) {
  std::vector<BinaryMask> unanimous = {row_mask({1, 0, 1}), row_mask({1, 0, 1}), row_mask({1, 0, 1})};
  EXPECT_EQ(majority_mask(unanimous), row_mask({1, 0, 1}));
  std::vector<BinaryMask> two_of_three = {row_mask({1, 1, 0, 0}), row_mask({1, 0, 1, 0}), row_mask({0, 1, 1, 0})};
  EXPECT_EQ(majority_mask(two_of_three), row_mask({1, 1, 1, 0}));
  std::vector<BinaryMask> split = {row_mask({1, 0}), row_mask({0, 1})};
  EXPECT_EQ(majority_mask(split), row_mask({1, 1}));
}

TEST(Single, MergesAndAveragesScores) {
  FixedBackend backend({{row_mask({1, 1, 0, 0}), 0.9}, {row_mask({1, 0, 1, 0}), 0.6}, {row_mask({0, 1, 1, 0}), 0.3}});
  const cv::Mat img(1, 4, CV_8UC3, cv::Scalar::all(0));
  const auto set = segment_single(img, "i", prompt_at(0, 0), backend, 3);
  ASSERT_TRUE(set);
  ASSERT_EQ(set->masks.size(), 1u);
  EXPECT_EQ(set->masks[0], row_mask({1, 1, 1, 0}));
  EXPECT_NEAR(set->scores[0], 0.6, 1e-12);
}

TEST(Multi, SortsByScoreAndTruncates) {
  FixedBackend backend({{row_mask({1, 0}), 0.2}, {row_mask({0, 1}), 0.9}, {row_mask({1, 1}), 0.5}});
  const cv::Mat img(1, 2, CV_8UC3, cv::Scalar::all(0));
  const auto set = segment_multi(img, "i", prompt_at(1, 0), backend, 2);
  ASSERT_TRUE(set);
  ASSERT_EQ(set->masks.size(), 2u);
  EXPECT_EQ(set->masks[0], row_mask({0, 1}));
  EXPECT_EQ(set->masks[1], row_mask({1, 1}));
  EXPECT_DOUBLE_EQ(set->top_score(), 0.9);
}

TEST(Multi, EmptyBackendAnswerIsEmptyProposal) {
  FixedBackend backend({});
  const cv::Mat img(2, 2, CV_8UC3, cv::Scalar::all(0));
  EXPECT_FALSE(segment_multi(img, "i", prompt_at(0, 0), backend, 3));
  EXPECT_FALSE(segment_single(img, "i", prompt_at(0, 0), backend, 3));
}

TEST(Segment, RejectsOutOfBoundsPromptsAndMisshapenMasks) {
  FixedBackend backend({{row_mask({1}), 0.5}});
  const cv::Mat img(2, 2, CV_8UC3, cv::Scalar::all(0));
  EXPECT_THROW(segment_multi(img, "i", prompt_at(2, 0), backend, 3), ContractViolation);
  EXPECT_THROW(segment_multi(img, "i", prompt_at(0, 0), backend, 3), ContractViolation);
}

TEST(RunSegmentation, SmoothedModeBlursOnlyTheBackendInput) {
  cv::Mat img(16, 16, CV_8UC3, cv::Scalar::all(0));
  img(cv::Rect(4, 4, 6, 6)).setTo(cv::Scalar::all(255));
  FixedBackend backend({{BinaryMask(16, 16, 1), 0.5}});
  SegmenterConfig cfg;
  cfg.input_mode = InputMode::kSmoothed;
  cfg.blur_sigma = 2.0;
  const std::vector<PointPrompt> prompts = {prompt_at(5, 5, 1), prompt_at(6, 6, 2)};
  const auto result = run_segmentation(img, "i", prompts, cfg, backend);
  ASSERT_EQ(result.sets.size(), 2u);
  ASSERT_EQ(backend.seen.size(), 2u);
  EXPECT_EQ(cv::norm(backend.seen[0], gaussian_blur(img, 2.0), cv::NORM_INF), 0.0);
  EXPECT_EQ(backend.points[1], cv::Point(6, 6));
  EXPECT_EQ(result.sets[1].prompt, prompts[1]);
}

TEST(RunSegmentation, EmptyAnswersBecomeSkips) {
  FixedBackend backend({});
  const cv::Mat img(4, 4, CV_8UC3, cv::Scalar::all(0));
  const std::vector<PointPrompt> prompts = {prompt_at(1, 1, 3)};
  const auto result = run_segmentation(img, "i", prompts, SegmenterConfig{}, backend);
  EXPECT_TRUE(result.sets.empty());
  ASSERT_EQ(result.skipped.size(), 1u);
  EXPECT_EQ(result.skipped[0], (std::pair<int, SkipReason>{3, SkipReason::kEmptyProposal}));
}

TEST(SegmenterConfigTest, ValidationAndJson) {
  SegmenterConfig cfg;
  EXPECT_EQ(cfg.k_proposals, 3);
  EXPECT_DOUBLE_EQ(cfg.blur_sigma, 10.0);
  cfg.k_proposals = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.k_proposals = 5;
  cfg.input_mode = InputMode::kSmoothed;
  const auto back = segmenter_config_from_json(to_json(cfg));
  EXPECT_EQ(back.k_proposals, 5);
  EXPECT_EQ(back.input_mode, InputMode::kSmoothed);
  EXPECT_THROW(parse_mask_strategy("both"), ConfigError);
}

TEST(ProposalSet, JsonRoundTrip) {
  MaskProposalSet set;
  set.image_id = "x";
  set.class_id = 4;
  set.prompt = {4, 3, 2, 0.5f};
  set.masks = {row_mask({1, 0, 1}), row_mask({0, 0, 1})};
  set.scores = {0.75, 0.25};
  const auto j = to_json(set);
  EXPECT_EQ(j["prompt"]["x"], 3);
  EXPECT_EQ(j["masks"][0]["rle"]["counts"], nlohmann::json::array({0, 1, 1, 1}));
  const auto back = proposal_set_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.masks, set.masks);
  EXPECT_EQ(back.scores, set.scores);
  EXPECT_EQ(back.prompt, set.prompt);
}

}  // namespace
}  // namespace foodseg
