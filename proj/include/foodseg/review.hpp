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

// Human review of proposal runs: decisions over (image, class) items and
// export of accepted masks as a palette-mask dataset.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "foodseg/dataset.hpp"
#include "foodseg/pipeline.hpp"
#include "foodseg/segmenter.hpp"

namespace foodseg {

enum class DecisionKind { kAccept, kRejectAll };
std::string to_string(DecisionKind kind);

struct ReviewDecision {
  std::string image_id;
  int class_id = 0;
  DecisionKind kind = DecisionKind::kAccept;
  int mask_index = -1;  // accept only
  std::string reviewer;
  std::string decided_at;
};

nlohmann::json to_json(const ReviewDecision& decision);

struct FieldError {
  std::string field;
  std::string message;
};

/// A payload failed validation; carries one entry per offending field.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses {image_id, class_id, decision: "accept"|"reject_all", mask_index, reviewer}.
/// Collects every malformed field before throwing ValidationError.
ReviewDecision parse_decision(const nlohmann::json& body);

struct QueueItem {
  std::string image_id;
  int class_id = 0;
  double top_score = 0.0;
  std::size_t n_masks = 0;
};

struct ExportSummary {
  std::filesystem::path root;
  std::size_t images = 0;    // images written
  std::size_t accepted = 0;  // accepted (image, class) items
  std::size_t rejected = 0;  // reject_all items, left out of the export
  std::size_t undecided = 0;
  std::size_t occluded = 0;  // accepted masks fully covered by higher-scoring ones
};

nlohmann::json to_json(const ExportSummary& summary);

/// Decisions for one run, persisted as decisions.jsonl in the run
/// directory. The log is append-only; the latest entry per item wins.
/// Safe for concurrent readers; writes are serialized.
class ReviewStore {
 public:
  explicit ReviewStore(std::filesystem::path run_dir, Clock clock = system_clock());

  const std::filesystem::path& run_dir() const { return run_dir_; }
  const RunManifest& manifest() const { return manifest_; }
  const ClassCatalog& catalog() const { return catalog_; }
  const std::vector<MaskProposalSet>& proposals() const { return proposals_; }
  const MaskProposalSet* find(const std::string& image_id, int class_id) const;

  /// Undecided items, ascending top score (most uncertain first).
  std::vector<QueueItem> queue() const;
  std::size_t decided() const;
  std::optional<ReviewDecision> current(const std::string& image_id, int class_id) const;
  std::vector<ReviewDecision> history(const std::string& image_id, int class_id) const;

  /// Validates against the referenced proposal set, stamps decided_at when
  /// empty, and appends. Throws NotFoundError for unknown items and
  /// ValidationError for an out-of-range mask index.
  ReviewDecision record(ReviewDecision decision);

  /// Writes images/{split}, masks/{split} and category.txt under `out_root`.
  /// Only images with at least one accepted item are exported. Where
  /// accepted masks overlap, the higher backend score wins per pixel,
  /// ties to the lower class id.
  ExportSummary export_dataset(const std::filesystem::path& out_root, Split split = Split::kTrain) const;

 private:
  using Key = std::pair<std::string, int>;

  std::filesystem::path run_dir_;
  Clock clock_;
  RunManifest manifest_;
  ClassCatalog catalog_;
  std::vector<MaskProposalSet> proposals_;
  std::map<Key, std::size_t> index_;
  std::map<Key, std::vector<ReviewDecision>> history_;
  mutable std::shared_mutex mutex_;
};

}  // namespace foodseg
