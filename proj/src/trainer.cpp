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

#include "foodseg/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "foodseg/errors.hpp"
#include "foodseg/hashing.hpp"
#include "foodseg/optimizer.hpp"

namespace fs = std::filesystem;

namespace foodseg {

TrainOptions train_options_from_json(const nlohmann::json& j) {
  TrainOptions options;
  options.classifier = classifier_config_from_json(j.value("classifier", nlohmann::json::object()));
  options.augmentation = augmentation_from_json(j.value("augmentation", nlohmann::json::object()));
  if (j.contains("backbone")) options.backbone = j["backbone"];
  if (j.contains("backbone_checkpoint")) options.backbone_checkpoint = j["backbone_checkpoint"].get<std::string>();
  options.seed = j.value("seed", options.seed);
  options.keep_checkpoints = j.value("keep_checkpoints", options.keep_checkpoints);
  return options;
}

namespace {

nlohmann::json catalog_json(const ClassCatalog& catalog) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : catalog.classes()) classes.push_back({{"id", c.id}, {"name", c.name}});
  return {{"classes", classes}, {"background_id", catalog.background_id()}, {"hash", catalog.fingerprint()}};
}

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d.bin", epoch);
  return buf;
}

}  // namespace

TrainResult train(const SplitIndex& data, TrainOptions options) {
  if (data.entries.empty()) throw ContractViolation("train: dataset is empty");
  ClassifierConfig& cfg = options.classifier;
  if (cfg.num_classes == 0) cfg.num_classes = static_cast<int>(data.catalog.size());
  cfg.validate();
  options.augmentation.validate();
  if (cfg.num_classes != static_cast<int>(data.catalog.size())) {
    throw ConfigError("num_classes " + std::to_string(cfg.num_classes) + " does not match the catalog size " +
                      std::to_string(data.catalog.size()));
  }
  if (options.augmentation.crop_size != cfg.input_resolution) {
    throw ConfigError("augmentation crop_size must equal the classifier input_resolution");
  }

  auto backbone = make_backbone(options.backbone, mix64(options.seed ^ 0x6261636bULL));
  if (backbone->input_resolution() != cfg.input_resolution) {
    throw ConfigError("backbone expects " + std::to_string(backbone->input_resolution()) +
                      " px inputs but the classifier is configured for " + std::to_string(cfg.input_resolution));
  }
  if (options.backbone_checkpoint) load_backbone_checkpoint(*options.backbone_checkpoint, *backbone);

  auto model = std::make_shared<MultiLabelClassifier>(std::move(backbone), cfg.num_classes,
                                                      data.catalog.background_id(), mix64(options.seed ^ 0x68656164ULL));

  const AdamW::Options adam{0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamW optimizer(model->parameters(), adam);

  TrainResult result;
  result.model = model;
  result.fingerprint = {
      {"code_version", kCodeVersion},
      {"classifier", to_json(cfg)},
      {"augmentation", to_json(options.augmentation)},
      {"backbone", model->backbone().spec()},
      {"backbone_checkpoint", options.backbone_checkpoint ? options.backbone_checkpoint->string() : "scratch"},
      {"seed", options.seed},
      {"catalog", catalog_json(data.catalog)},
      {"optimizer", {{"name", "adamw"}, {"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}}},
      {"schedule", "linear-warmup-cosine"},
      {"train_images", data.entries.size()},
  };

  std::ofstream log;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir / "checkpoints");
    log.open(options.out_dir / "train_log.jsonl");
  }

  const long n = static_cast<long>(data.entries.size());
  const long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;
  long step = 0;
  std::deque<fs::path> kept;

  std::vector<long> order(static_cast<std::size_t>(n));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0L);
    std::mt19937_64 shuffle_rng(mix64(options.seed + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    double lr = 0.0;
    long true_pos = 0, false_pos = 0, false_neg = 0;
    for (long begin = 0; begin < n; begin += cfg.batch_size) {
      const long end = std::min(n, begin + cfg.batch_size);
      auto grads = model->zero_gradients();
      double batch_loss = 0.0;
      for (long i = begin; i < end; ++i) {
        const DatasetEntry& entry = data.entries[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        LabeledImage sample = materialize(entry);
        sample.gt_mask.reset();
        const ImageTensor input =
            augment(sample, options.augmentation, derive_sample_seed(options.seed, epoch, entry.image_id));
        const auto fwd = model->forward(input);
        std::vector<double> targets(entry.label_vector.begin(), entry.label_vector.end());
        std::vector<double> probs(fwd.logits.size());
        for (std::size_t c = 0; c < probs.size(); ++c) probs[c] = sigmoid(fwd.logits[c]);
        batch_loss += bce_multilabel_loss(targets, probs);
        for (std::size_t c = 0; c < probs.size(); ++c) {
          if (static_cast<int>(c) == data.catalog.background_id()) continue;
          const bool predicted = probs[c] >= cfg.decision_threshold;
          const bool present = targets[c] > 0.5;
          true_pos += predicted && present;
          false_pos += predicted && !present;
          false_neg += !predicted && present;
        }
        auto dlogits = bce_logit_gradient(targets, fwd.logits);
        const double inv_batch = 1.0 / static_cast<double>(end - begin);
        for (auto& g : dlogits) g *= inv_batch;
        model->backward(fwd, dlogits, grads);
      }
      lr = lr_at(step, total_steps, cfg);
      optimizer.step(grads, lr);
      ++step;
      epoch_loss += batch_loss;
      const double mean_batch_loss = batch_loss / static_cast<double>(end - begin);
      if (log) {
        log << nlohmann::json{{"type", "step"}, {"epoch", epoch}, {"step", step}, {"loss", mean_batch_loss}, {"lr", lr}}
                   .dump()
            << '\n';
      }
    }
    EpochSummary summary;
    summary.epoch = epoch;
    summary.loss = epoch_loss / static_cast<double>(n);
    summary.lr = lr;
    summary.precision = true_pos + false_pos > 0 ? static_cast<double>(true_pos) / (true_pos + false_pos) : 0.0;
    summary.recall = true_pos + false_neg > 0 ? static_cast<double>(true_pos) / (true_pos + false_neg) : 0.0;
    result.epochs.push_back(summary);
    spdlog::info("epoch {}/{}: loss {:.6f} lr {:.3g} precision {:.3f} recall {:.3f}", epoch, cfg.epochs,
                 summary.loss, lr, summary.precision, summary.recall);
    if (log) {
      log << nlohmann::json{{"type", "epoch"},         {"epoch", epoch},
                            {"step", step},            {"loss", summary.loss},
                            {"lr", lr},                {"precision", summary.precision},
                            {"recall", summary.recall}}
                 .dump()
          << '\n';
      log.flush();
    }
    if (!options.out_dir.empty() && options.keep_checkpoints > 0) {
      const fs::path ckpt = options.out_dir / "checkpoints" / checkpoint_name(epoch);
      write_weights(ckpt, *model);
      kept.push_back(ckpt);
      while (static_cast<int>(kept.size()) > options.keep_checkpoints) {
        fs::remove(kept.front());
        kept.pop_front();
      }
    }
  }

  result.fingerprint["epochs_completed"] = cfg.epochs;
  if (!options.out_dir.empty()) save_model(options.out_dir, *model, result.fingerprint);
  return result;
}

}  // namespace foodseg
