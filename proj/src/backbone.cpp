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

#include "foodseg/backbone.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "foodseg/errors.hpp"

namespace foodseg {

namespace {

constexpr float kNormEps = 1e-5f;

enum ParamIndex : std::size_t {
  kEmbedW = 0,
  kEmbedB,
  kFc1W,
  kFc1B,
  kFc2W,
  kFc2B,
  kNormW,
  kNormB,
  kParamCount
};

constexpr double kInvSqrt2 = 0.70710678118654752440;

float gelu(float x) { return 0.5f * x * (1.0f + std::erf(x * static_cast<float>(kInvSqrt2))); }

float gelu_grad(float x) {
  const float cdf = 0.5f * (1.0f + std::erf(x * static_cast<float>(kInvSqrt2)));
  const float pdf = std::exp(-0.5f * x * x) * static_cast<float>(std::numbers::inv_sqrtpi * kInvSqrt2);
  return cdf + x * pdf;
}

Matrix random_normal(int rows, int cols, float stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

class PatchMlpTrace final : public BackboneTrace {
 public:
  Matrix patches;   // T x K
  Matrix embedded;  // T x D
  Matrix pre_act;   // T x H
  Matrix hidden;    // T x H
  Matrix xhat;      // T x D
  Eigen::VectorXf inv_std;

  void set_output(TokenGrid grid) { output_ = std::move(grid); }
};

}  // namespace

nlohmann::json PatchMlpSpec::to_json() const {
  return {{"architecture", PatchMlpBackbone::kArchitecture},
          {"input_resolution", input_resolution},
          {"patch", patch},
          {"dim", dim},
          {"hidden", hidden}};
}

PatchMlpSpec PatchMlpSpec::from_json(const nlohmann::json& j) {
  PatchMlpSpec s;
  try {
    if (j.value("architecture", std::string(PatchMlpBackbone::kArchitecture)) != PatchMlpBackbone::kArchitecture) {
      throw ConfigError("not a patch-mlp spec: " + j.dump());
    }
    s.input_resolution = j.value("input_resolution", s.input_resolution);
    s.patch = j.value("patch", s.patch);
    s.dim = j.value("dim", s.dim);
    s.hidden = j.value("hidden", s.hidden);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("backbone spec: ") + e.what());
  }
  return s;
}

Matrix patchify(const ImageTensor& input, int patch) {
  require(patch > 0, "patchify: patch must be positive");
  require(input.height % patch == 0 && input.width % patch == 0,
          "patchify: input size must be a multiple of the patch size");
  const int grid_rows = input.height / patch;
  const int grid_cols = input.width / patch;
  const int k = input.channels * patch * patch;
  Matrix out(grid_rows * grid_cols, k);
  for (int gy = 0; gy < grid_rows; ++gy) {
    for (int gx = 0; gx < grid_cols; ++gx) {
      const int t = gy * grid_cols + gx;
      int col = 0;
      for (int c = 0; c < input.channels; ++c) {
        for (int py = 0; py < patch; ++py) {
          for (int px = 0; px < patch; ++px) out(t, col++) = input.at(c, gy * patch + py, gx * patch + px);
        }
      }
    }
  }
  return out;
}

PatchMlpBackbone::PatchMlpBackbone(const PatchMlpSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.input_resolution <= 0 || spec.patch <= 0 || spec.dim <= 0 || spec.hidden <= 0) {
    throw ConfigError("patch-mlp: all dimensions must be positive");
  }
  if (spec.input_resolution % spec.patch != 0) {
    throw ConfigError("patch-mlp: input_resolution must be a multiple of patch");
  }
  std::mt19937_64 rng(seed);
  const int k = 3 * spec.patch * spec.patch;
  params_.resize(kParamCount);
  params_[kEmbedW] = {"embed.weight", random_normal(k, spec.dim, std::sqrt(1.0f / k), rng), true};
  params_[kEmbedB] = {"embed.bias", Matrix::Zero(1, spec.dim), false};
  params_[kFc1W] = {"mlp.fc1.weight", random_normal(spec.dim, spec.hidden, std::sqrt(2.0f / spec.dim), rng), true};
  params_[kFc1B] = {"mlp.fc1.bias", Matrix::Zero(1, spec.hidden), false};
  params_[kFc2W] = {"mlp.fc2.weight", random_normal(spec.hidden, spec.dim, std::sqrt(1.0f / spec.hidden), rng),
                    true};
  params_[kFc2B] = {"mlp.fc2.bias", Matrix::Zero(1, spec.dim), false};
  params_[kNormW] = {"norm.weight", Matrix::Ones(1, spec.dim), false};
  params_[kNormB] = {"norm.bias", Matrix::Zero(1, spec.dim), false};
}

nlohmann::json PatchMlpBackbone::spec() const { return spec_.to_json(); }

std::unique_ptr<BackboneTrace> PatchMlpBackbone::forward(const ImageTensor& input) const {
  require(input.channels == 3, "patch-mlp: expected a 3-channel tensor");
  require(input.height == spec_.input_resolution && input.width == spec_.input_resolution,
          "patch-mlp: input must be " + std::to_string(spec_.input_resolution) + "x" +
              std::to_string(spec_.input_resolution));
  auto trace = std::make_unique<PatchMlpTrace>();
  const auto& p = params_;

  trace->patches = patchify(input, spec_.patch);
  trace->embedded = trace->patches * p[kEmbedW].value;
  trace->embedded.rowwise() += p[kEmbedB].value.row(0);

  trace->pre_act = trace->embedded * p[kFc1W].value;
  trace->pre_act.rowwise() += p[kFc1B].value.row(0);
  trace->hidden = trace->pre_act.unaryExpr([](float v) { return gelu(v); });

  Matrix residual = trace->embedded + trace->hidden * p[kFc2W].value;
  residual.rowwise() += p[kFc2B].value.row(0);

  const Eigen::Index tokens = residual.rows();
  const Eigen::Index dim = residual.cols();
  trace->xhat.resize(tokens, dim);
  trace->inv_std.resize(tokens);
  for (Eigen::Index t = 0; t < tokens; ++t) {
    const float mean = residual.row(t).mean();
    const float var = (residual.row(t).array() - mean).square().mean();
    const float inv = 1.0f / std::sqrt(var + kNormEps);
    trace->inv_std(t) = inv;
    trace->xhat.row(t) = (residual.row(t).array() - mean) * inv;
  }

  TokenGrid grid;
  grid.rows = spec_.input_resolution / spec_.patch;
  grid.cols = grid.rows;
  grid.tokens = trace->xhat.array().rowwise() * p[kNormW].value.row(0).array();
  grid.tokens.rowwise() += p[kNormB].value.row(0);
  trace->set_output(std::move(grid));
  return trace;
}

void PatchMlpBackbone::backward(const BackboneTrace& base, const Matrix& grad_tokens, std::span<Matrix> grads) const {
  const auto* trace = dynamic_cast<const PatchMlpTrace*>(&base);
  require(trace != nullptr, "patch-mlp: foreign trace passed to backward");
  require(grads.size() == params_.size(), "patch-mlp: gradient list does not match parameters");
  require(grad_tokens.rows() == trace->xhat.rows() && grad_tokens.cols() == trace->xhat.cols(),
          "patch-mlp: token gradient has the wrong shape");
  const auto& p = params_;

  // LayerNorm affine.
  grads[kNormW] += (grad_tokens.array() * trace->xhat.array()).colwise().sum().matrix();
  grads[kNormB] += grad_tokens.colwise().sum();
  const Matrix dxhat = grad_tokens.array().rowwise() * p[kNormW].value.row(0).array();

  // LayerNorm normalization.
  const float inv_dim = 1.0f / static_cast<float>(dxhat.cols());
  Matrix dresidual(dxhat.rows(), dxhat.cols());
  for (Eigen::Index t = 0; t < dxhat.rows(); ++t) {
    const float mean_d = dxhat.row(t).sum() * inv_dim;
    const float mean_dx = dxhat.row(t).dot(trace->xhat.row(t)) * inv_dim;
    dresidual.row(t) =
        trace->inv_std(t) * (dxhat.row(t).array() - mean_d - trace->xhat.row(t).array() * mean_dx).matrix();
  }

  // MLP block with residual connection.
  grads[kFc2W] += trace->hidden.transpose() * dresidual;
  grads[kFc2B] += dresidual.colwise().sum();
  const Matrix dhidden = dresidual * p[kFc2W].value.transpose();
  const Matrix dpre =
      dhidden.array() * trace->pre_act.unaryExpr([](float v) { return gelu_grad(v); }).array();
  grads[kFc1W] += trace->embedded.transpose() * dpre;
  grads[kFc1B] += dpre.colwise().sum();
  const Matrix dembedded = dresidual + dpre * p[kFc1W].value.transpose();

  // Patch embedding.
  grads[kEmbedW] += trace->patches.transpose() * dembedded;
  grads[kEmbedB] += dembedded.colwise().sum();
}

std::unique_ptr<Backbone> make_backbone(const nlohmann::json& spec, std::uint64_t seed) {
  const std::string arch = spec.value("architecture", std::string());
  if (arch == PatchMlpBackbone::kArchitecture) {
    return std::make_unique<PatchMlpBackbone>(PatchMlpSpec::from_json(spec), seed);
  }
  throw ConfigError("unknown backbone architecture '" + arch + "'");
}

}  // namespace foodseg
