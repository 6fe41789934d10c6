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

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace foodseg {

/// Fine-tuning hyper-parameters for the multi-label classifier.
struct ClassifierConfig {
  int input_resolution = 384;
  int num_classes = 0;  // N food classes + background
  int epochs = 50;
  int warmup_epochs = 10;
  double base_lr = 2e-4;
  double weight_decay = 1e-4;
  int batch_size = 64;
  double decision_threshold = 0.5;

  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const ClassifierConfig& cfg);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

/// Clamp applied to probabilities inside the loss.
inline constexpr double kProbabilityEps = 1e-7;

/// Mean binary cross-entropy over all N+1 class positions:
///   -1/(N+1) * sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)]
/// with p clamped to [eps, 1 - eps]. Throws ContractViolation on length mismatch.
double bce_multilabel_loss(std::span<const double> targets, std::span<const double> probs);

/// d(loss)/d(logit_i) for the same loss evaluated at sigmoid(logits).
std::vector<double> bce_logit_gradient(std::span<const double> targets, std::span<const double> logits);

double sigmoid(double x);

/// Linear warmup from 0 to base_lr over the first warmup_epochs/epochs of
/// the run, then half-cosine decay to 0 at total_steps.
double lr_at(long step, long total_steps, const ClassifierConfig& cfg);

/// Number of optimizer steps spent in warmup for a run of total_steps.
long warmup_steps(long total_steps, const ClassifierConfig& cfg);

struct PredictionResult {
  std::string image_id;
  std::vector<double> probabilities;
  /// Classes with p >= threshold, ascending. Background is excluded.
  std::vector<int> predicted_classes;
};

}  // namespace foodseg
