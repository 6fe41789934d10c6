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

// Feature backbones behind a small adapter interface.
//
// A backbone maps a normalized image tensor to a grid of feature tokens
// taken at its final normalization layer, i.e. after every block and right
// before any classification head. That layer is also the hook point for
// gradient-weighted activation maps, so an adapter must be able to run a
// backward pass from token gradients to its parameters.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "foodseg/raster.hpp"

namespace foodseg {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<float, 1, Eigen::Dynamic>;

struct Parameter {
  std::string name;
  Matrix value;
  bool decay = true;  // weight decay applies (off for biases and norm affine terms)
};

/// Feature tokens laid out row-major over a rows x cols grid.
struct TokenGrid {
  Matrix tokens;  // (rows * cols) x feature_dim
  int rows = 0;
  int cols = 0;
};

/// Whatever a backbone needs to keep from forward for its backward pass.
class BackboneTrace {
 public:
  virtual ~BackboneTrace() = default;
  const TokenGrid& output() const { return output_; }

 protected:
  TokenGrid output_;
};

class Backbone {
 public:
  virtual ~Backbone() = default;

  /// Architecture descriptor; two backbones with equal specs are weight-compatible.
  virtual nlohmann::json spec() const = 0;
  virtual int input_resolution() const = 0;
  virtual int feature_dim() const = 0;
  /// Whether forward exposes the final-norm tokens and backward accepts gradients there.
  virtual bool provides_hook_gradients() const = 0;

  virtual std::unique_ptr<BackboneTrace> forward(const ImageTensor& input) const = 0;
  /// Accumulates (+=) parameter gradients for d(objective)/d(tokens) into `grads`,
  /// which is aligned with parameters().
  virtual void backward(const BackboneTrace& trace, const Matrix& grad_tokens, std::span<Matrix> grads) const = 0;

  virtual std::vector<Parameter>& parameters() = 0;
  virtual const std::vector<Parameter>& parameters() const = 0;
};

/// Hyper-parameters of the bundled compact backbone.
struct PatchMlpSpec {
  int input_resolution = 384;
  int patch = 4;
  int dim = 64;
  int hidden = 128;

  nlohmann::json to_json() const;
  static PatchMlpSpec from_json(const nlohmann::json& j);
  friend bool operator==(const PatchMlpSpec&, const PatchMlpSpec&) = default;
};

/// Compact token backbone: non-overlapping patch embedding, one residual
/// GELU MLP block, final LayerNorm. Suitable for CPU training on small
/// corpora and as the reference implementation of the adapter contract.
class PatchMlpBackbone final : public Backbone {
 public:
  static constexpr const char* kArchitecture = "patch-mlp";

  PatchMlpBackbone(const PatchMlpSpec& spec, std::uint64_t seed);

  nlohmann::json spec() const override;
  int input_resolution() const override { return spec_.input_resolution; }
  int feature_dim() const override { return spec_.dim; }
  bool provides_hook_gradients() const override { return true; }

  std::unique_ptr<BackboneTrace> forward(const ImageTensor& input) const override;
  void backward(const BackboneTrace& trace, const Matrix& grad_tokens, std::span<Matrix> grads) const override;

  std::vector<Parameter>& parameters() override { return params_; }
  const std::vector<Parameter>& parameters() const override { return params_; }

  const PatchMlpSpec& patch_spec() const { return spec_; }

 private:
  PatchMlpSpec spec_;
  std::vector<Parameter> params_;
};

/// Builds a backbone from its spec() json. Throws ConfigError for unknown architectures.
std::unique_ptr<Backbone> make_backbone(const nlohmann::json& spec, std::uint64_t seed);

/// Flattens non-overlapping patch x patch tiles of `input` into rows of a
/// (grid*grid) x (channels*patch*patch) matrix, row-major over the grid.
Matrix patchify(const ImageTensor& input, int patch);

}  // namespace foodseg
