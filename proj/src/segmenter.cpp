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

#include "foodseg/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "foodseg/rle.hpp"

namespace foodseg {

std::string to_string(InputMode mode) { return mode == InputMode::kOriginal ? "original" : "smoothed"; }
std::string to_string(MaskStrategy strategy) { return strategy == MaskStrategy::kSingle ? "single" : "multi"; }

InputMode parse_input_mode(const std::string& text) {
  if (text == "original") return InputMode::kOriginal;
  if (text == "smoothed") return InputMode::kSmoothed;
  throw ConfigError("input mode must be original|smoothed, got '" + text + "'");
}

MaskStrategy parse_mask_strategy(const std::string& text) {
  if (text == "single") return MaskStrategy::kSingle;
  if (text == "multi") return MaskStrategy::kMulti;
  throw ConfigError("mask strategy must be single|multi, got '" + text + "'");
}

void SegmenterConfig::validate() const {
  if (k_proposals < 1) throw ConfigError("k_proposals must be >= 1");
  if (input_mode == InputMode::kSmoothed && !(blur_sigma > 0)) {
    throw ConfigError("blur_sigma must be positive in smoothed mode");
  }
}

nlohmann::json to_json(const SegmenterConfig& cfg) {
  return {{"input_mode", to_string(cfg.input_mode)},
          {"blur_sigma", cfg.blur_sigma},
          {"mask_strategy", to_string(cfg.mask_strategy)},
          {"k_proposals", cfg.k_proposals}};
}

SegmenterConfig segmenter_config_from_json(const nlohmann::json& j) {
  SegmenterConfig cfg;
  cfg.input_mode = parse_input_mode(j.value("input_mode", std::string("original")));
  cfg.blur_sigma = j.value("blur_sigma", cfg.blur_sigma);
  cfg.mask_strategy = parse_mask_strategy(j.value("mask_strategy", std::string("multi")));
  cfg.k_proposals = j.value("k_proposals", cfg.k_proposals);
  cfg.validate();
  return cfg;
}

double MaskProposalSet::top_score() const {
  return scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
}

nlohmann::json to_json(const MaskProposalSet& set) {
  nlohmann::json masks = nlohmann::json::array();
  for (std::size_t i = 0; i < set.masks.size(); ++i) {
    masks.push_back({{"rle", to_json(rle_encode(set.masks[i]))}, {"score", set.scores[i]}});
  }
  return {{"image_id", set.image_id},
          {"class_id", set.class_id},
          {"prompt", {{"x", set.prompt.x}, {"y", set.prompt.y}, {"activation", set.prompt.activation}}},
          {"masks", masks}};
}

MaskProposalSet proposal_set_from_json(const nlohmann::json& j) {
  MaskProposalSet set;
  try {
    set.image_id = j.at("image_id").get<std::string>();
    set.class_id = j.at("class_id").get<int>();
    set.prompt.class_id = set.class_id;
    set.prompt.x = j.at("prompt").at("x").get<int>();
    set.prompt.y = j.at("prompt").at("y").get<int>();
    set.prompt.activation = j.at("prompt").value("activation", 0.0f);
    for (const auto& m : j.at("masks")) {
      set.masks.push_back(rle_decode(rle_from_json(m.at("rle"))));
      set.scores.push_back(m.at("score").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("malformed proposal set: ") + e.what());
  }
  return set;
}

std::vector<double> gaussian_kernel(double sigma) {
  require(sigma > 0, "gaussian_kernel: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-static_cast<double>(i) * i / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (auto& w : taps) w /= sum;
  return taps;
}

namespace {

// Symmetric reflection including the edge sample: ... c b a | a b c ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Convolves along one axis of a CV_64F image. Output is written as
// x[center] + sum_k w_k (x[k] - x[center]) so constant signals pass through exactly.
cv::Mat convolve_axis(const cv::Mat& src, const std::vector<double>& taps, bool horizontal) {
  const int radius = static_cast<int>(taps.size() / 2);
  const int channels = src.channels();
  cv::Mat dst(src.size(), src.type());
  const int n = horizontal ? src.cols : src.rows;
  std::vector<int> index(static_cast<std::size_t>(n + 2 * radius));
  for (int i = -radius; i < n + radius; ++i) index[static_cast<std::size_t>(i + radius)] = reflect_index(i, n);

  for (int y = 0; y < src.rows; ++y) {
    auto* out = dst.ptr<double>(y);
    for (int x = 0; x < src.cols; ++x) {
      const int pos = horizontal ? x : y;
      for (int c = 0; c < channels; ++c) {
        const double center = src.ptr<double>(y)[x * channels + c];
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int j = index[static_cast<std::size_t>(pos + k + radius)];
          const double v = horizontal ? src.ptr<double>(y)[j * channels + c] : src.ptr<double>(j)[x * channels + c];
          acc += taps[static_cast<std::size_t>(k + radius)] * (v - center);
        }
        out[x * channels + c] = center + acc;
      }
    }
  }
  return dst;
}

}  // namespace

cv::Mat gaussian_blur(const cv::Mat& image, double sigma) {
  require(sigma > 0, "gaussian_blur: sigma must be positive");
  require(!image.empty(), "gaussian_blur: empty image");
  const int depth = image.depth();
  require(depth == CV_8U || depth == CV_32F || depth == CV_64F, "gaussian_blur: unsupported pixel depth");
  cv::Mat work;
  image.convertTo(work, CV_MAKETYPE(CV_64F, image.channels()));
  const auto taps = gaussian_kernel(sigma);
  work = convolve_axis(work, taps, /*horizontal=*/true);
  work = convolve_axis(work, taps, /*horizontal=*/false);
  cv::Mat out;
  work.convertTo(out, image.type());  // rounds and saturates for 8-bit
  return out;
}

BinaryMask majority_mask(std::span<const BinaryMask> masks) {
  require(!masks.empty(), "majority_mask: no masks");
  const int rows = masks.front().rows();
  const int cols = masks.front().cols();
  std::vector<int> votes(static_cast<std::size_t>(rows) * cols, 0);
  for (const auto& m : masks) {
    require(m.rows() == rows && m.cols() == cols, "majority_mask: mask dimensions differ");
    const auto& bits = m.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) votes[i] += bits[i];
  }
  std::vector<std::uint8_t> bits(votes.size());
  const int n = static_cast<int>(masks.size());
  for (std::size_t i = 0; i < votes.size(); ++i) bits[i] = 2 * votes[i] >= n ? 1 : 0;
  return BinaryMask(rows, cols, std::move(bits));
}

namespace {

std::vector<ScoredMask> query(const cv::Mat& image, const PointPrompt& prompt, PromptableSegmenter& backend, int k) {
  require(k >= 1, "k must be >= 1");
  if (prompt.x < 0 || prompt.y < 0 || prompt.x >= image.cols || prompt.y >= image.rows) {
    throw ContractViolation("prompt (" + std::to_string(prompt.x) + ", " + std::to_string(prompt.y) +
                            ") lies outside the " + std::to_string(image.cols) + "x" + std::to_string(image.rows) +
                            " image");
  }
  auto proposals = backend.propose(image, cv::Point(prompt.x, prompt.y), /*want_multi=*/true, k);
  for (const auto& p : proposals) {
    if (p.mask.rows() != image.rows || p.mask.cols() != image.cols) {
      throw ContractViolation("backend '" + backend.name() + "' returned a mask with the wrong dimensions");
    }
  }
  return proposals;
}

}  // namespace

std::optional<MaskProposalSet> segment_single(const cv::Mat& image, const std::string& image_id,
                                              const PointPrompt& prompt, PromptableSegmenter& backend, int k) {
  auto proposals = query(image, prompt, backend, k);
  if (proposals.empty()) return std::nullopt;
  std::vector<BinaryMask> masks;
  double score_sum = 0.0;
  for (auto& p : proposals) {
    masks.push_back(std::move(p.mask));
    score_sum += p.score;
  }
  MaskProposalSet set;
  set.image_id = image_id;
  set.class_id = prompt.class_id;
  set.prompt = prompt;
  set.masks.push_back(majority_mask(masks));
  set.scores.push_back(score_sum / static_cast<double>(masks.size()));
  return set;
}

std::optional<MaskProposalSet> segment_multi(const cv::Mat& image, const std::string& image_id,
                                             const PointPrompt& prompt, PromptableSegmenter& backend, int k) {
  auto proposals = query(image, prompt, backend, k);
  if (proposals.empty()) return std::nullopt;
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const ScoredMask& a, const ScoredMask& b) { return a.score > b.score; });
  if (static_cast<int>(proposals.size()) > k) proposals.resize(static_cast<std::size_t>(k));
  MaskProposalSet set;
  set.image_id = image_id;
  set.class_id = prompt.class_id;
  set.prompt = prompt;
  for (auto& p : proposals) {
    set.masks.push_back(std::move(p.mask));
    set.scores.push_back(p.score);
  }
  return set;
}

cv::Mat backend_input(const cv::Mat& image, const SegmenterConfig& cfg) {
  return cfg.input_mode == InputMode::kSmoothed ? gaussian_blur(image, cfg.blur_sigma) : image;
}

SegmentationResult run_segmentation(const cv::Mat& image, const std::string& image_id,
                                    std::span<const PointPrompt> prompts, const SegmenterConfig& cfg,
                                    PromptableSegmenter& backend) {
  cfg.validate();
  SegmentationResult result;
  if (prompts.empty()) return result;
  const cv::Mat input = backend_input(image, cfg);
  for (const auto& prompt : prompts) {
    auto set = cfg.mask_strategy == MaskStrategy::kSingle
                   ? segment_single(input, image_id, prompt, backend, cfg.k_proposals)
                   : segment_multi(input, image_id, prompt, backend, cfg.k_proposals);
    if (set) {
      result.sets.push_back(std::move(*set));
    } else {
      result.skipped.emplace_back(prompt.class_id, SkipReason::kEmptyProposal);
    }
  }
  return result;
}

}  // namespace foodseg
