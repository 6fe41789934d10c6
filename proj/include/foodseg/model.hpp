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
#include <span>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "foodseg/backbone.hpp"
#include "foodseg/classifier.hpp"

namespace foodseg {

/// Backbone + global-average-pool + linear multi-label head.
///
/// The head sees the mean of the final-norm tokens; its N+1 logits go
/// through an element-wise sigmoid. Forward state is returned to the
/// caller, so a loaded model is immutable and safe for concurrent reads.
class MultiLabelClassifier {
 public:
  MultiLabelClassifier(std::unique_ptr<Backbone> backbone, int num_classes, int background_id,
                       std::uint64_t head_seed);

  struct Forward {
    std::unique_ptr<BackboneTrace> trace;
    RowVector pooled;
    std::vector<double> logits;

    const TokenGrid& tokens() const { return trace->output(); }
  };

  Forward forward(const ImageTensor& input) const;
  std::vector<double> probabilities(const ImageTensor& input) const;

  /// Gradient of logit `class_id` with respect to the final-norm tokens.
  Matrix hook_gradient(const Forward& fwd, int class_id) const;

  /// Accumulates parameter gradients for upstream d(objective)/d(logits).
  void backward(const Forward& fwd, std::span<const double> grad_logits, std::span<Matrix> grads) const;

  /// Backbone parameters followed by head.weight and head.bias.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<Matrix> zero_gradients() const;

  Backbone& backbone() { return *backbone_; }
  const Backbone& backbone() const { return *backbone_; }
  int num_classes() const { return num_classes_; }
  int background_id() const { return background_id_; }
  int input_resolution() const { return backbone_->input_resolution(); }

  Parameter& head_weight() { return head_weight_; }  // feature_dim x num_classes
  Parameter& head_bias() { return head_bias_; }

 private:
  std::unique_ptr<Backbone> backbone_;
  int num_classes_;
  int background_id_;
  Parameter head_weight_;
  Parameter head_bias_;
};

/// Binary weights blob: magic, JSON header (backbone spec, head shape,
/// parameter table), then little-endian float32 payload.
void write_weights(const std::filesystem::path& path, const MultiLabelClassifier& model);
MultiLabelClassifier read_weights(const std::filesystem::path& path);

/// Copies backbone parameters from a weights blob into `backbone`. Throws
/// ConfigError when the stored architecture spec or any tensor shape differs.
void load_backbone_checkpoint(const std::filesystem::path& path, Backbone& backbone);

/// A trained model directory: weights.bin plus config.json fingerprint.
struct ModelArtifact {
  std::shared_ptr<const MultiLabelClassifier> model;
  ClassifierConfig config;
  nlohmann::json fingerprint;
};

void save_model(const std::filesystem::path& dir, const MultiLabelClassifier& model, const nlohmann::json& fingerprint);
ModelArtifact load_model(const std::filesystem::path& dir);

/// Resizes to the model resolution, scores every class, thresholds.
/// Throws ConfigError for thresholds outside (0, 1) and DecodeError for empty images.
PredictionResult predict(const cv::Mat& image, const MultiLabelClassifier& model, double threshold,
                         std::string image_id = {});

}  // namespace foodseg
