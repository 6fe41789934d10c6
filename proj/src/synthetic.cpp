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

#include "foodseg/synthetic.hpp"

#include <array>
#include <cstdio>
#include <random>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "foodseg/dataset.hpp"
#include "foodseg/hashing.hpp"
#include "foodseg/raster.hpp"

namespace fs = std::filesystem;

namespace foodseg {

namespace {

// BGR base colors per class id.
const std::array<cv::Vec3i, 4> kBaseColor = {
    cv::Vec3i{0, 0, 0},
    cv::Vec3i{35, 35, 205},   // red
    cv::Vec3i{40, 180, 40},   // green
    cv::Vec3i{200, 70, 45},   // blue
};

int rand_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

ShapesSample render_shapes_sample(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ShapesSample sample;
  sample.labels = cv::Mat::zeros(size, size, CV_8UC1);

  std::vector<int> classes;
  for (int c = kRedDisk; c <= kBlueTriangle; ++c) {
    if (std::bernoulli_distribution(0.5)(rng)) classes.push_back(c);
  }
  if (classes.empty()) classes.push_back(rand_int(rng, kRedDisk, kBlueTriangle));

  std::vector<cv::Rect> placed;
  const double scale = size / 128.0;
  for (int c : classes) {
    const int extent = static_cast<int>(scale * (c == kRedDisk ? rand_int(rng, 36, 52) : rand_int(rng, 36, 54)));
    for (int attempt = 0; attempt < 200; ++attempt) {
      const int x = rand_int(rng, 2, size - extent - 2);
      const int y = rand_int(rng, 2, size - extent - 2);
      const cv::Rect box(x, y, extent, extent);
      bool overlaps = false;
      for (const auto& other : placed) {
        const cv::Rect padded(other.x - 4, other.y - 4, other.width + 8, other.height + 8);
        if ((box & padded).area() > 0) overlaps = true;
      }
      if (overlaps) continue;
      placed.push_back(box);
      const cv::Scalar label(c);
      if (c == kRedDisk) {
        cv::circle(sample.labels, {x + extent / 2, y + extent / 2}, extent / 2, label, cv::FILLED, cv::LINE_8);
      } else if (c == kGreenSquare) {
        cv::rectangle(sample.labels, box, label, cv::FILLED, cv::LINE_8);
      } else {
        const std::vector<cv::Point> tri = {{x + extent / 2, y}, {x, y + extent - 1}, {x + extent - 1, y + extent - 1}};
        cv::fillPoly(sample.labels, std::vector<std::vector<cv::Point>>{tri}, label, cv::LINE_8);
      }
      break;
    }
  }

  const int gray = rand_int(rng, 140, 220);
  const cv::Vec3i background{gray + rand_int(rng, -12, 12), gray + rand_int(rng, -12, 12), gray + rand_int(rng, -12, 12)};
  std::uniform_int_distribution<int> noise(-7, 7);
  sample.image.create(size, size, CV_8UC3);
  for (int y = 0; y < size; ++y) {
    const auto* lab = sample.labels.ptr<std::uint8_t>(y);
    auto* px = sample.image.ptr<cv::Vec3b>(y);
    for (int x = 0; x < size; ++x) {
      const cv::Vec3i base = lab[x] == kShapeBackground ? background : kBaseColor[lab[x]];
      for (int ch = 0; ch < 3; ++ch) px[x][ch] = cv::saturate_cast<std::uint8_t>(base[ch] + noise(rng));
    }
  }
  return sample;
}

void make_shapes_dataset(const fs::path& root, const ShapesDatasetSpec& spec) {
  ClassCatalog catalog({{kShapeBackground, "background"},
                        {kRedDisk, "red_disk"},
                        {kGreenSquare, "green_square"},
                        {kBlueTriangle, "blue_triangle"}},
                       kShapeBackground);
  catalog.write(root / "category.txt");
  for (const Split split : {Split::kTrain, Split::kTest}) {
    const int count = split == Split::kTrain ? spec.train_images : spec.test_images;
    for (int i = 0; i < count; ++i) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "%s_%04d", to_string(split).c_str(), i);
      const auto sample = render_shapes_sample(spec.size, mix64(spec.seed * 1000003ULL + (split == Split::kTrain ? 0 : 1u << 20) + i));
      write_png(root / "images" / to_string(split) / (std::string(stem) + ".png"), sample.image);
      write_png(root / "masks" / to_string(split) / (std::string(stem) + ".png"), sample.labels);
    }
  }
}

}  // namespace foodseg
