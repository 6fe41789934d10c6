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

// Dataset ingestion for pixel-annotated segmentation corpora.
//
// Expected layout under a dataset root:
//   category.txt              one "id<TAB>name" per line, ids 0..N contiguous
//   images/{split}/*.jpg|png  color images
//   masks/{split}/*.png       single-channel masks, pixel value = class id
//
// Pixel masks are only used to derive image-level label vectors and,
// later, for evaluation. Training never sees them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

namespace foodseg {

struct ClassEntry {
  int id = 0;
  std::string name;
};

class ClassCatalog {
 public:
  ClassCatalog() = default;
  /// Validates ids are unique, contiguous from 0 and that background_id is present.
  ClassCatalog(std::vector<ClassEntry> classes, int background_id);

  /// Parses category.txt. The entry named "background" (any case) is the
  /// background class; otherwise id 0 is assumed.
  static ClassCatalog read(const std::filesystem::path& category_file);
  void write(const std::filesystem::path& category_file) const;

  std::size_t size() const { return classes_.size(); }
  int background_id() const { return background_id_; }
  bool contains(int id) const { return id >= 0 && id < static_cast<int>(classes_.size()); }
  const std::string& name(int id) const;
  const std::vector<ClassEntry>& classes() const { return classes_; }

  /// Stable hash over (id, name) pairs and the background id.
  std::string fingerprint() const;

 private:
  std::vector<ClassEntry> classes_;
  int background_id_ = 0;
};

using LabelVector = std::vector<std::uint8_t>;

struct LabeledImage {
  std::string image_id;
  cv::Mat pixels;                  // CV_8UC3
  LabelVector label_vector;        // length N+1, entries 0/1
  std::optional<cv::Mat> gt_mask;  // CV_8UC1 class ids, evaluation only
};

/// Entry i is 1 iff class i covers at least `min_pixel_count` pixels.
/// Throws IngestionError naming the first id missing from the catalog.
LabelVector derive_image_labels(const cv::Mat& gt_mask, const ClassCatalog& catalog,
                                int min_pixel_count = 1);

/// Class ids whose label entry is set, ascending.
std::vector<int> positive_classes(const LabelVector& labels);

enum class Split { kTrain, kTest };
std::string to_string(Split split);
Split parse_split(const std::string& name);

/// One indexed sample. Pixels are decoded on demand by `materialize` so a
/// full split does not have to sit in memory.
struct DatasetEntry {
  std::string image_id;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
  LabelVector label_vector;
  int rows = 0;
  int cols = 0;
};

struct LoadOptions {
  int min_pixel_count = 1;
  /// When false, images without a matching mask are indexed without labels
  /// (used for annotation runs over unlabeled photos).
  bool masks_required = true;
};

struct SplitIndex {
  Split split = Split::kTrain;
  ClassCatalog catalog;
  std::vector<DatasetEntry> entries;  // sorted by image_id
};

/// Indexes one split and derives label vectors from the masks.
/// Errors: empty split, image without mask (stems listed), dimension
/// mismatch between image and mask, unknown class ids.
SplitIndex load_split(const std::filesystem::path& root, Split split, const LoadOptions& options = {});

LabeledImage materialize(const DatasetEntry& entry);

/// Per-split counts and per-class image frequency.
nlohmann::json ingestion_report(const std::vector<SplitIndex>& splits);

}  // namespace foodseg
