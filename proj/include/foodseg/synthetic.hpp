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

#pragma once

#include <cstdint>
#include <filesystem>

#include <opencv2/core.hpp>

namespace foodseg {

/// A small colored-shapes corpus in the ingestion layout: background plus
/// red disks (1), green squares (2) and blue triangles (3). Each image holds
/// one to three non-overlapping shapes of distinct classes.
struct ShapesDatasetSpec {
  int train_images = 200;
  int test_images = 50;
  int size = 128;
  std::uint64_t seed = 7;
};

inline constexpr int kShapeBackground = 0;
inline constexpr int kRedDisk = 1;
inline constexpr int kGreenSquare = 2;
inline constexpr int kBlueTriangle = 3;

void make_shapes_dataset(const std::filesystem::path& root, const ShapesDatasetSpec& spec);

/// One rendered sample: BGR image and its class-id label map.
struct ShapesSample {
  cv::Mat image;
  cv::Mat labels;
};

ShapesSample render_shapes_sample(int size, std::uint64_t seed);

}  // namespace foodseg
