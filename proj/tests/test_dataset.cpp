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

#include <fstream>

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include "foodseg/dataset.hpp"
#include "foodseg/errors.hpp"
#include "foodseg/raster.hpp"
#include "foodseg/synthetic.hpp"
#include "support/tiny_world.hpp"

namespace fs = std::filesystem;

namespace foodseg {
namespace {

ClassCatalog three_classes() { return ClassCatalog({{0, "background"}, {1, "rice"}, {2, "egg"}, {3, "tea"}}, 0); }

TEST(Catalog, RejectsGapsAndMissingBackground) {
  EXPECT_THROW(ClassCatalog({{0, "background"}, {2, "egg"}}, 0), ConfigError);
  EXPECT_THROW(ClassCatalog({{0, "a"}, {1, "b"}}, 5), ConfigError);
}

TEST(Catalog, ReadsTabSeparatedFileAndFindsBackground) {
  testing::TempDir dir;
  {
    std::ofstream out(dir.path() / "category.txt");
    out << "0\tcandy\n1\tBackground\n2\tegg tart\n";
  }
  const auto catalog = ClassCatalog::read(dir.path() / "category.txt");
  EXPECT_EQ(catalog.size(), 3u);
  EXPECT_EQ(catalog.background_id(), 1);
  EXPECT_EQ(catalog.name(2), "egg tart");
}

TEST(Catalog, WriteReadRoundTrip) {
  testing::TempDir dir;
  const auto catalog = three_classes();
  catalog.write(dir.path() / "category.txt");
  const auto back = ClassCatalog::read(dir.path() / "category.txt");
  EXPECT_EQ(back.fingerprint(), catalog.fingerprint());
}

TEST(Labels, DerivedFromMaskPixels) {
  cv::Mat mask = cv::Mat::zeros(8, 8, CV_8UC1);
  mask(cv::Rect(0, 0, 2, 2)).setTo(2);
  mask.at<std::uint8_t>(7, 7) = 3;
  EXPECT_EQ(derive_image_labels(mask, three_classes()), (LabelVector{1, 0, 1, 1}));
  EXPECT_EQ(derive_image_labels(mask, three_classes(), 2), (LabelVector{1, 0, 1, 0}));
}

TEST(Labels, UnknownIdNamesTheId) {
  cv::Mat mask = cv::Mat::zeros(4, 4, CV_8UC1);
  mask.at<std::uint8_t>(0, 0) = 9;
  try {
    derive_image_labels(mask, three_classes());
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find('9'), std::string::npos);
  }
}

TEST(Labels, LabelVectorsAreTheMaskSupport) {
  testing::TempDir dir;
  make_shapes_dataset(dir.path(), {12, 4, 64, 3});
  const auto split = load_split(dir.path(), Split::kTrain);
  ASSERT_EQ(split.entries.size(), 12u);
  for (const auto& e : split.entries) {
    const cv::Mat mask = read_label_map(*e.mask_path);
    for (int c = 0; c < 4; ++c) {
      EXPECT_EQ(e.label_vector[c], cv::countNonZero(mask == c) > 0 ? 1 : 0) << e.image_id << " class " << c;
    }
    EXPECT_EQ(e.label_vector[0], 1);
  }
}

TEST(LoadSplit, EntriesSortedAndMaterialized) {
  testing::TempDir dir;
  make_shapes_dataset(dir.path(), {5, 3, 64, 4});
  const auto split = load_split(dir.path(), Split::kTest);
  ASSERT_EQ(split.entries.size(), 3u);
  EXPECT_TRUE(std::is_sorted(split.entries.begin(), split.entries.end(),
                             [](const auto& a, const auto& b) { return a.image_id < b.image_id; }));
  const auto sample = materialize(split.entries[0]);
  EXPECT_EQ(sample.pixels.type(), CV_8UC3);
  ASSERT_TRUE(sample.gt_mask.has_value());
  EXPECT_EQ(sample.gt_mask->size(), sample.pixels.size());
}

TEST(LoadSplit, MissingMaskListsStem) {
  testing::TempDir dir;
  make_shapes_dataset(dir.path(), {3, 1, 64, 4});
  fs::remove(dir.path() / "masks" / "train" / "train_0001.png");
  try {
    load_split(dir.path(), Split::kTrain);
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("train_0001"), std::string::npos);
  }
  LoadOptions lenient;
  lenient.masks_required = false;
  const auto split = load_split(dir.path(), Split::kTrain, lenient);
  EXPECT_EQ(split.entries.size(), 3u);
  EXPECT_FALSE(split.entries[1].mask_path.has_value());
}

TEST(LoadSplit, DimensionMismatchIsAnError) {
  testing::TempDir dir;
  make_shapes_dataset(dir.path(), {2, 1, 64, 4});
  write_png(dir.path() / "masks" / "train" / "train_0000.png", cv::Mat::zeros(32, 32, CV_8UC1));
  EXPECT_THROW(load_split(dir.path(), Split::kTrain), IngestionError);
}

TEST(LoadSplit, EmptySplitIsAnError) {
  testing::TempDir dir;
  three_classes().write(dir.path() / "category.txt");
  fs::create_directories(dir.path() / "images" / "train");
  EXPECT_THROW(load_split(dir.path(), Split::kTrain), IngestionError);
}

TEST(Ingestion, ReportCountsClassFrequency) {
  testing::TempDir dir;
  make_shapes_dataset(dir.path(), {10, 2, 64, 5});
  const auto train = load_split(dir.path(), Split::kTrain);
  const auto report = ingestion_report({train});
  const auto& s = report["splits"]["train"];
  EXPECT_EQ(s["count"], 10);
  std::vector<int> freq(4, 0);
  for (const auto& e : train.entries)
    for (int c = 0; c < 4; ++c) freq[c] += e.label_vector[c];
  for (int c = 0; c < 4; ++c) EXPECT_EQ(s["class_frequency"][c]["images"].get<int>(), freq[c]);
}

}  // namespace
}  // namespace foodseg
