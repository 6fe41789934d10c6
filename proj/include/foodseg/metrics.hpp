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

// Mask quality under the true-positive-restricted protocol: only classes
// that are both predicted and present produce records, per-class pixel
// counts are summed over the split, then divided.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "foodseg/classifier.hpp"
#include "foodseg/dataset.hpp"
#include "foodseg/raster.hpp"
#include "foodseg/segmenter.hpp"

namespace foodseg {

struct ConfusionCounts {
  int class_id = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
  }
  /// tp / (tp + fp + fn); 1.0 when the denominator is zero.
  double iou() const;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct EvalRecord {
  std::string image_id;
  int class_id = 0;
  int chosen_mask_index = 0;
  double iou = 0.0;
  ConfusionCounts counts;
};

nlohmann::json to_json(const EvalRecord& record);
EvalRecord eval_record_from_json(const nlohmann::json& j);

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, int class_id = 0);

/// |pred & gt| / |pred | gt|; 1.0 when both are empty. Throws ContractViolation on shape mismatch.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// The proposal with the highest IoU against `gt`, ties to the lower index.
/// std::nullopt signals EmptyProposal.
std::optional<EvalRecord> best_case_select(const MaskProposalSet& proposals, const BinaryMask& gt);

struct ClassIou {
  int class_id = 0;
  std::string name;
  std::size_t n_records = 0;
  ConfusionCounts counts;
  double iou = 0.0;
};

struct MiouResult {
  std::vector<ClassIou> classes;  // evaluated classes only, ascending id
  /// Unweighted mean over `classes`; std::nullopt is the EmptyEvaluation result.
  std::optional<double> miou;

  bool empty() const { return !miou.has_value(); }
  std::size_t evaluated_classes() const { return classes.size(); }
};

/// Sums counts per class across all records, computes one IoU per class,
/// and averages over classes that have at least one record.
MiouResult miou(std::span<const EvalRecord> records, const ClassCatalog& catalog, bool exclude_background = true);

/// predicted_classes intersected with the classes present in `gt_labels`, ascending.
std::vector<int> tp_filter(const PredictionResult& prediction, const LabelVector& gt_labels);

}  // namespace foodseg
