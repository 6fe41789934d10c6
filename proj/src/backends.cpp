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

#include "foodseg/backends.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

#include <httplib.h>

#include "foodseg/hashing.hpp"
#include "foodseg/rle.hpp"

namespace foodseg {

BinaryMask connected_component(const cv::Mat& image, cv::Point seed, int tolerance) {
  require(!image.empty() && image.depth() == CV_8U, "connected_component: expected an 8-bit image");
  require(seed.x >= 0 && seed.y >= 0 && seed.x < image.cols && seed.y < image.rows,
          "connected_component: seed outside image");
  const int channels = image.channels();
  const auto* seed_px = image.ptr<std::uint8_t>(seed.y) + seed.x * channels;
  std::vector<int> reference(seed_px, seed_px + channels);

  auto similar = [&](int y, int x) {
    const auto* px = image.ptr<std::uint8_t>(y) + x * channels;
    for (int c = 0; c < channels; ++c) {
      if (std::abs(static_cast<int>(px[c]) - reference[static_cast<std::size_t>(c)]) > tolerance) return false;
    }
    return true;
  };

  BinaryMask mask(image.rows, image.cols);
  std::vector<cv::Point> stack{seed};
  mask.set(seed.y, seed.x, true);
  while (!stack.empty()) {
    const cv::Point p = stack.back();
    stack.pop_back();
    const cv::Point neighbors[] = {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}};
    for (const auto& q : neighbors) {
      if (q.x < 0 || q.y < 0 || q.x >= image.cols || q.y >= image.rows) continue;
      if (mask.at(q.y, q.x) || !similar(q.y, q.x)) continue;
      mask.set(q.y, q.x, true);
      stack.push_back(q);
    }
  }
  return mask;
}

RegionGrowSegmenter::RegionGrowSegmenter(std::vector<int> tolerances) : tolerances_(std::move(tolerances)) {
  if (tolerances_.empty()) throw ConfigError("region-grow needs at least one tolerance");
}

std::vector<ScoredMask> RegionGrowSegmenter::propose(const cv::Mat& image, cv::Point point, bool want_multi, int k) {
  const std::size_t count = want_multi ? std::min(tolerances_.size(), static_cast<std::size_t>(std::max(k, 1))) : 1;
  std::vector<ScoredMask> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({connected_component(image, point, tolerances_[i]), 0.9 - 0.1 * static_cast<double>(i)});
  }
  return out;
}

std::uint64_t image_content_hash(const cv::Mat& image) {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(image.rows))
      .update(static_cast<std::uint64_t>(image.cols))
      .update(static_cast<std::uint64_t>(image.type()));
  for (int y = 0; y < image.rows; ++y) {
    const auto* row = image.ptr<std::uint8_t>(y);
    h.update(std::span<const std::uint8_t>(row, image.cols * image.elemSize()));
  }
  return h.digest();
}

void GroundTruthSegmenter::add(const cv::Mat& image, const cv::Mat& label_map) {
  require(label_map.type() == CV_8UC1, "GroundTruthSegmenter: label map must be CV_8UC1");
  require(label_map.size() == image.size(), "GroundTruthSegmenter: label map size differs from image");
  by_content_[image_content_hash(image)] = label_map;
}

std::vector<ScoredMask> GroundTruthSegmenter::propose(const cv::Mat& image, cv::Point point, bool, int) {
  const auto it = by_content_.find(image_content_hash(image));
  if (it == by_content_.end()) throw ContractViolation("ground-truth backend: image was not registered");
  const cv::Mat& labels = it->second;
  const int class_id = labels.at<std::uint8_t>(point.y, point.x);
  return {{BinaryMask::from_label(labels, class_id), 1.0}};
}

HttpSegmenter::HttpSegmenter(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

std::vector<ScoredMask> HttpSegmenter::propose(const cv::Mat& image, cv::Point point, bool want_multi, int k) {
  httplib::Client client(base_url_);
  client.set_read_timeout(timeout_seconds_, 0);
  client.set_write_timeout(timeout_seconds_, 0);
  const auto png = encode_png(image);
  const nlohmann::json request = {{"x", point.x}, {"y", point.y}, {"multimask", want_multi}, {"k", k}};
  httplib::MultipartFormDataItems items = {
      {"image", std::string(png.begin(), png.end()), "image.png", "image/png"},
      {"request", request.dump(), "", "application/json"},
  };
  auto res = client.Post("/propose", items);
  if (!res) {
    throw std::runtime_error("backend " + base_url_ + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw std::runtime_error("backend " + base_url_ + " returned HTTP " + std::to_string(res->status));
  }
  std::vector<ScoredMask> out;
  try {
    const auto body = nlohmann::json::parse(res->body);
    for (const auto& m : body.at("masks")) {
      out.push_back({rle_decode(rle_from_json(m.at("rle"))), m.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("backend " + base_url_ + " sent a malformed response: " + e.what());
  }
  return out;
}

std::unique_ptr<PromptableSegmenter> make_segmenter(const std::string& descriptor) {
  if (descriptor.rfind("http://", 0) == 0) {
    return std::make_unique<HttpSegmenter>(descriptor);
  }
  if (descriptor == "region-grow") return std::make_unique<RegionGrowSegmenter>();
  if (descriptor.rfind("region-grow:", 0) == 0) {
    std::vector<int> tolerances;
    std::stringstream ss(descriptor.substr(12));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        tolerances.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw ConfigError("bad region-grow tolerance '" + item + "'");
      }
    }
    return std::make_unique<RegionGrowSegmenter>(std::move(tolerances));
  }
  throw ConfigError("unknown backend '" + descriptor + "' (expected region-grow[:t1,t2,...] or http://host:port)");
}

}  // namespace foodseg
