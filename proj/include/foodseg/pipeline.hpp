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

// Batch orchestration: classify -> CAM -> prompt -> segment -> evaluate or
// persist proposals for review.
//
// Run directory layout ({artifacts}/runs/{run_id}/):
//   manifest.json     run fingerprints, per-image terminal status, summary
//   proposals.json    [{image_id, class_id, prompt:{x,y}, masks:[{rle, score}]}]
//   category.txt      class catalog used by the run
//   images/           {image_id}.png copies of the processed images
//   cams/             {image_id}.{class_id}.cam.png + .json sidecars
//   records.json      auto-eval only: per-(image, class) evaluation records
//   report.{json,csv,md}  auto-eval only
//   decisions.jsonl   review decisions, append-only (written by the service)

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "foodseg/dataset.hpp"
#include "foodseg/metrics.hpp"
#include "foodseg/model.hpp"
#include "foodseg/report.hpp"
#include "foodseg/segmenter.hpp"

namespace foodseg {

enum class RunMode { kAutoEval, kProposeForReview };
std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);

/// Returns an ISO-8601 UTC timestamp.
using Clock = std::function<std::string()>;
/// Wall clock, or SOURCE_DATE_EPOCH when that variable is set.
Clock system_clock();
Clock fixed_clock(std::string timestamp);

struct RunOptions {
  RunMode mode = RunMode::kAutoEval;
  SegmenterConfig segmenter;
  double decision_threshold = 0.5;
  std::filesystem::path artifacts_root;
  int workers = 1;
  bool dump_cams = true;
  bool overwrite = false;
  double failure_flag_ratio = 0.10;
  Clock clock = system_clock();
};

struct SkippedClass {
  int class_id = 0;
  SkipReason reason = SkipReason::kNoActivation;
};

struct ImageStatus {
  std::string image_id;
  std::string status;  // done | failed | skipped:NoActivation | skipped:EmptyProposal
  std::string error;
  std::vector<int> prompt_classes;  // tp-filtered (auto-eval) or predicted (review)
  std::vector<SkippedClass> skipped;
  std::size_t proposal_sets = 0;
};

struct RunManifest {
  std::string run_id;
  RunMode mode = RunMode::kAutoEval;
  std::string dataset_root;
  std::string split;
  std::string dataset_fingerprint;
  std::string classifier_fingerprint;
  double decision_threshold = 0.5;
  SegmenterConfig segmenter;
  std::string backend;
  std::string started_at;
  std::string finished_at;
  std::vector<ImageStatus> images;
  bool flagged = false;

  std::size_t count(const std::string& status) const;
  std::size_t prompt_classes_total() const;
  std::size_t skipped_total() const;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

struct RunOutput {
  RunManifest manifest;
  std::vector<MaskProposalSet> proposals;
  std::vector<EvalRecord> records;
  std::optional<EvaluationReport> report;
  std::filesystem::path run_dir;
};

/// Stable hash of a split's ids, geometry and label vectors.
std::string dataset_fingerprint(const SplitIndex& split);
/// Stable hash of a model's architecture and parameter values.
std::string classifier_fingerprint(const MultiLabelClassifier& model);

/// Processes every image of `split`. Per-image failures are recorded and
/// the run continues; more than `failure_flag_ratio` failures flags it.
/// Auto-eval prompts only true-positive classes and needs ground truth;
/// review mode prompts every predicted class and needs none.
RunOutput run_batch(const SplitIndex& split, const std::filesystem::path& dataset_root,
                    const MultiLabelClassifier& model, PromptableSegmenter& backend, const RunOptions& options);

/// Loads a run directory written by run_batch.
RunManifest read_manifest(const std::filesystem::path& run_dir);
std::vector<MaskProposalSet> read_proposals(const std::filesystem::path& run_dir);

}  // namespace foodseg
