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

#include "foodseg/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "foodseg/errors.hpp"

namespace foodseg {

void ClassifierConfig::validate() const {
  if (input_resolution <= 0) throw ConfigError("input_resolution must be positive");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs >= epochs) throw ConfigError("warmup_epochs must be in [0, epochs)");
  if (!(base_lr > 0)) throw ConfigError("base_lr must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ConfigError("decision_threshold must lie strictly inside (0, 1)");
  }
}

nlohmann::json to_json(const ClassifierConfig& cfg) {
  return {{"input_resolution", cfg.input_resolution},
          {"num_classes", cfg.num_classes},
          {"epochs", cfg.epochs},
          {"warmup_epochs", cfg.warmup_epochs},
          {"base_lr", cfg.base_lr},
          {"weight_decay", cfg.weight_decay},
          {"batch_size", cfg.batch_size},
          {"decision_threshold", cfg.decision_threshold}};
}

ClassifierConfig classifier_config_from_json(const nlohmann::json& j) {
  ClassifierConfig cfg;
  try {
    cfg.input_resolution = j.value("input_resolution", cfg.input_resolution);
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.warmup_epochs = j.value("warmup_epochs", cfg.warmup_epochs);
    cfg.base_lr = j.value("base_lr", cfg.base_lr);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.decision_threshold = j.value("decision_threshold", cfg.decision_threshold);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("classifier config: ") + e.what());
  }
  return cfg;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bce_multilabel_loss(std::span<const double> targets, std::span<const double> probs) {
  if (targets.size() != probs.size() || targets.empty()) {
    throw ContractViolation("bce_multilabel_loss: targets and probabilities must have the same non-zero length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double p = std::clamp(probs[i], kProbabilityEps, 1.0 - kProbabilityEps);
    sum += targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(targets.size());
}

std::vector<double> bce_logit_gradient(std::span<const double> targets, std::span<const double> logits) {
  if (targets.size() != logits.size() || targets.empty()) {
    throw ContractViolation("bce_logit_gradient: length mismatch");
  }
  std::vector<double> grad(targets.size());
  const double inv = 1.0 / static_cast<double>(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) grad[i] = (sigmoid(logits[i]) - targets[i]) * inv;
  return grad;
}

long warmup_steps(long total_steps, const ClassifierConfig& cfg) {
  return total_steps * cfg.warmup_epochs / cfg.epochs;
}

double lr_at(long step, long total_steps, const ClassifierConfig& cfg) {
  if (total_steps <= 0) throw ContractViolation("lr_at: total_steps must be positive");
  if (step < 0 || step > total_steps) throw ContractViolation("lr_at: step outside [0, total_steps]");
  const long warmup = warmup_steps(total_steps, cfg);
  if (step < warmup) return cfg.base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace foodseg
