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

#include "foodseg/model.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <random>

#include "foodseg/augment.hpp"
#include "foodseg/errors.hpp"

namespace fs = std::filesystem;

namespace foodseg {

static_assert(std::endian::native == std::endian::little, "weights blobs are stored little-endian");

namespace {

constexpr char kMagic[8] = {'F', 'S', 'E', 'G', 'W', 'T', 'S', '1'};

struct Blob {
  nlohmann::json header;
  std::map<std::string, Matrix> tensors;
};

void write_blob(const fs::path& path, const nlohmann::json& meta, const std::vector<const Parameter*>& params) {
  nlohmann::json header = meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto* p : params) {
    header["tensors"].push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  const std::string text = header.dump();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const auto length = static_cast<std::uint64_t>(text.size());
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Blob read_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open weights " + path.string());
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw ConfigError(path.string() + " is not a foodseg weights blob");
  }
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || length > (1u << 26)) throw ConfigError(path.string() + ": corrupt header");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  Blob blob;
  try {
    blob.header = nlohmann::json::parse(text);
    for (const auto& t : blob.header.at("tensors")) {
      Matrix m(t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
      in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
      if (!in) throw ConfigError(path.string() + ": truncated tensor " + t.at("name").get<std::string>());
      blob.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": malformed header: " + e.what());
  }
  return blob;
}

void assign(Parameter& p, const Blob& blob, const fs::path& path) {
  const auto it = blob.tensors.find(p.name);
  if (it == blob.tensors.end()) throw ConfigError(path.string() + ": missing tensor " + p.name);
  if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
    throw ConfigError(path.string() + ": shape mismatch for " + p.name);
  }
  p.value = it->second;
}

}  // namespace

MultiLabelClassifier::MultiLabelClassifier(std::unique_ptr<Backbone> backbone, int num_classes, int background_id,
                                           std::uint64_t head_seed)
    : backbone_(std::move(backbone)), num_classes_(num_classes), background_id_(background_id) {
  require(backbone_ != nullptr, "classifier needs a backbone");
  require(num_classes >= 1, "classifier needs at least one class");
  require(background_id >= 0 && background_id < num_classes, "background id outside class range");
  std::mt19937_64 rng(head_seed);
  std::normal_distribution<float> dist(0.0f, 0.02f);
  head_weight_ = {"head.weight", Matrix(backbone_->feature_dim(), num_classes), true};
  for (Eigen::Index i = 0; i < head_weight_.value.size(); ++i) head_weight_.value.data()[i] = dist(rng);
  head_bias_ = {"head.bias", Matrix::Zero(1, num_classes), false};
}

MultiLabelClassifier::Forward MultiLabelClassifier::forward(const ImageTensor& input) const {
  Forward fwd;
  fwd.trace = backbone_->forward(input);
  const Matrix& tokens = fwd.trace->output().tokens;
  fwd.pooled = tokens.colwise().mean();
  const RowVector z = fwd.pooled * head_weight_.value + head_bias_.value;
  fwd.logits.assign(z.data(), z.data() + z.size());
  return fwd;
}

std::vector<double> MultiLabelClassifier::probabilities(const ImageTensor& input) const {
  auto logits = forward(input).logits;
  for (auto& v : logits) v = sigmoid(v);
  return logits;
}

Matrix MultiLabelClassifier::hook_gradient(const Forward& fwd, int class_id) const {
  require(class_id >= 0 && class_id < num_classes_, "hook_gradient: class id out of range");
  const Matrix& tokens = fwd.tokens().tokens;
  const float inv_tokens = 1.0f / static_cast<float>(tokens.rows());
  Matrix grad(tokens.rows(), tokens.cols());
  grad.rowwise() = head_weight_.value.col(class_id).transpose() * inv_tokens;
  return grad;
}

void MultiLabelClassifier::backward(const Forward& fwd, std::span<const double> grad_logits,
                                    std::span<Matrix> grads) const {
  require(grad_logits.size() == static_cast<std::size_t>(num_classes_), "backward: logit gradient size mismatch");
  const std::size_t nb = backbone_->parameters().size();
  require(grads.size() == nb + 2, "backward: gradient list does not match parameters");
  RowVector dz(num_classes_);
  for (int i = 0; i < num_classes_; ++i) dz(i) = static_cast<float>(grad_logits[static_cast<std::size_t>(i)]);
  grads[nb] += fwd.pooled.transpose() * dz;
  grads[nb + 1] += dz;
  const RowVector dpooled = dz * head_weight_.value.transpose();
  const Matrix& tokens = fwd.tokens().tokens;
  Matrix dtokens(tokens.rows(), tokens.cols());
  dtokens.rowwise() = dpooled / static_cast<float>(tokens.rows());
  backbone_->backward(*fwd.trace, dtokens, grads.first(nb));
}

std::vector<Parameter*> MultiLabelClassifier::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : backbone_->parameters()) out.push_back(&p);
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
  return out;
}

std::vector<const Parameter*> MultiLabelClassifier::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : std::as_const(*backbone_).parameters()) out.push_back(&p);
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
  return out;
}

std::vector<Matrix> MultiLabelClassifier::zero_gradients() const {
  std::vector<Matrix> grads;
  for (const auto* p : parameters()) grads.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  return grads;
}

void write_weights(const fs::path& path, const MultiLabelClassifier& model) {
  nlohmann::json meta = {{"backbone", model.backbone().spec()},
                         {"num_classes", model.num_classes()},
                         {"background_id", model.background_id()}};
  write_blob(path, meta, model.parameters());
}

MultiLabelClassifier read_weights(const fs::path& path) {
  const Blob blob = read_blob(path);
  if (!blob.header.contains("num_classes")) {
    throw ConfigError(path.string() + " holds backbone weights only, not a classifier");
  }
  MultiLabelClassifier model(make_backbone(blob.header.at("backbone"), 0), blob.header.at("num_classes").get<int>(),
                             blob.header.at("background_id").get<int>(), 0);
  for (auto* p : model.parameters()) assign(*p, blob, path);
  return model;
}

void load_backbone_checkpoint(const fs::path& path, Backbone& backbone) {
  const Blob blob = read_blob(path);
  const auto stored = blob.header.value("backbone", nlohmann::json());
  if (stored != backbone.spec()) {
    throw ConfigError("checkpoint architecture mismatch: checkpoint " + stored.dump() + " vs configured " +
                      backbone.spec().dump());
  }
  for (auto& p : backbone.parameters()) assign(p, blob, path);
}

void save_model(const fs::path& dir, const MultiLabelClassifier& model, const nlohmann::json& fingerprint) {
  fs::create_directories(dir);
  write_weights(dir / "weights.bin", model);
  std::ofstream out(dir / "config.json");
  out << fingerprint.dump(2) << '\n';
}

ModelArtifact load_model(const fs::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw ConfigError("model directory has no config.json: " + dir.string());
  ModelArtifact artifact;
  try {
    artifact.fingerprint = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config.json: " + std::string(e.what()));
  }
  artifact.config = classifier_config_from_json(artifact.fingerprint.value("classifier", nlohmann::json::object()));
  artifact.model = std::make_shared<const MultiLabelClassifier>(read_weights(dir / "weights.bin"));
  return artifact;
}

PredictionResult predict(const cv::Mat& image, const MultiLabelClassifier& model, double threshold,
                         std::string image_id) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("decision threshold must lie strictly inside (0, 1)");
  }
  if (image.empty()) throw DecodeError("predict: empty image");
  PredictionResult result;
  result.image_id = std::move(image_id);
  result.probabilities = model.probabilities(preprocess(image, model.input_resolution()));
  for (int c = 0; c < model.num_classes(); ++c) {
    if (c == model.background_id()) continue;
    if (result.probabilities[static_cast<std::size_t>(c)] >= threshold) result.predicted_classes.push_back(c);
  }
  return result;
}

}  // namespace foodseg
