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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "foodseg/metrics.hpp"
#include "foodseg/segmenter.hpp"

namespace foodseg {

/// One evaluation row: a (preprocessing, mask strategy) setting and its scores.
struct EvaluationReport {
  InputMode input_mode = InputMode::kOriginal;
  MaskStrategy mask_strategy = MaskStrategy::kMulti;
  MiouResult result;
  std::size_t n_images = 0;
  std::size_t n_proposal_sets = 0;  // evaluated (image, class) pairs
  std::size_t n_masks = 0;          // individual candidate masks across all sets

  double masks_per_image() const {
    return n_images == 0 ? 0.0 : static_cast<double>(n_proposal_sets) / static_cast<double>(n_images);
  }
};

EvaluationReport build_report(std::span<const EvalRecord> records, std::span<const MaskProposalSet> sets,
                              std::size_t n_images, const ClassCatalog& catalog, const SegmenterConfig& cfg);

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Columns: class_id,name,n_records,iou
std::string to_csv(const EvaluationReport& report);

/// Table with one row per report and the `top_k` classes with the most
/// records (in the first report) as columns.
std::string to_markdown(std::span<const EvaluationReport> reports, std::size_t top_k = 10);

/// Writes report.json, report.csv and report.md into `dir`.
void write_report_files(const std::filesystem::path& dir, const EvaluationReport& report);

}  // namespace foodseg
