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
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "foodseg/augment.hpp"
#include "foodseg/classifier.hpp"
#include "foodseg/dataset.hpp"
#include "foodseg/model.hpp"

namespace foodseg {

inline constexpr const char* kCodeVersion = "0.3.0";

struct TrainOptions {
  ClassifierConfig classifier;
  AugmentationConfig augmentation;
  nlohmann::json backbone = PatchMlpSpec{}.to_json();
  /// Pretrained backbone weights; the head is always freshly initialized.
  std::optional<std::filesystem::path> backbone_checkpoint;
  std::uint64_t seed = 0;
  /// When non-empty: weights, config.json, train_log.jsonl and rolling
  /// epoch checkpoints are written here.
  std::filesystem::path out_dir;
  int keep_checkpoints = 3;
};

/// Reads {"classifier": {...}, "augmentation": {...}, "backbone": {...}, "seed": n}.
TrainOptions train_options_from_json(const nlohmann::json& j);

struct EpochSummary {
  int epoch = 0;
  double loss = 0.0;  // mean per-sample loss over the epoch
  double lr = 0.0;    // learning rate at the last step of the epoch
  double precision = 0.0;  // image-level, at the decision threshold, background excluded
  double recall = 0.0;
};

struct TrainResult {
  std::shared_ptr<MultiLabelClassifier> model;
  std::vector<EpochSummary> epochs;
  nlohmann::json fingerprint;
};

/// Fine-tunes the classifier on `data`. All configuration and checkpoint
/// compatibility errors are raised before the first epoch.
TrainResult train(const SplitIndex& data, TrainOptions options);

}  // namespace foodseg
