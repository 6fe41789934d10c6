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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "foodseg/classifier.hpp"
#include "foodseg/errors.hpp"

namespace foodseg {
namespace {

TEST(Loss, HalfProbabilitiesGiveLn2) {
  const std::vector<double> y = {1, 0, 1, 0};
  const std::vector<double> p = {0.5, 0.5, 0.5, 0.5};
  EXPECT_NEAR(bce_multilabel_loss(y, p), std::log(2.0), 1e-12);
}

TEST(Loss, QuarterProbabilityOnPositives) {
  const std::vector<double> y = {1, 1};
  const std::vector<double> p = {0.25, 0.25};
  EXPECT_NEAR(bce_multilabel_loss(y, p), -std::log(0.25), 1e-12);
}

TEST(Loss, ClampsSaturatedProbabilities) {
  const std::vector<double> y = {1, 0};
  const std::vector<double> p = {0.0, 1.0};
  EXPECT_NEAR(bce_multilabel_loss(y, p), -std::log(kProbabilityEps), 1e-9);
}

TEST(Loss, LengthMismatchThrows) {
  const std::vector<double> y = {1, 0};
  const std::vector<double> p = {0.5};
  EXPECT_THROW(bce_multilabel_loss(y, p), ContractViolation);
}

TEST(Loss, LogitGradientMatchesFiniteDifference) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits(6), y(6);
    for (int i = 0; i < 6; ++i) {
      logits[i] = z(rng);
      y[i] = static_cast<double>(rng() % 2);
    }
    const auto grad = bce_logit_gradient(y, logits);
    for (int i = 0; i < 6; ++i) {
      auto f = [&](double delta) {
        auto l = logits;
        l[i] += delta;
        std::vector<double> p(6);
        for (int j = 0; j < 6; ++j) p[j] = sigmoid(l[j]);
        return bce_multilabel_loss(y, p);
      };
      EXPECT_NEAR(grad[i], (f(1e-5) - f(-1e-5)) / 2e-5, 1e-6);
    }
  }
}

TEST(Schedule, WarmupThenCosineToZero) {
  ClassifierConfig cfg;
  cfg.num_classes = 4;
  const long total = 500;  // 50 epochs x 10 steps
  EXPECT_EQ(warmup_steps(total, cfg), 100);
  EXPECT_DOUBLE_EQ(lr_at(0, total, cfg), 0.0);
  EXPECT_NEAR(lr_at(50, total, cfg), cfg.base_lr * 0.5, 1e-12);
  EXPECT_NEAR(lr_at(100, total, cfg), cfg.base_lr, 1e-12);
  EXPECT_NEAR(lr_at(300, total, cfg), cfg.base_lr * 0.5, 1e-12);
  EXPECT_NEAR(lr_at(total, total, cfg), 0.0, 1e-15);
  double previous = lr_at(100, total, cfg);
  for (long s = 101; s <= total; ++s) {
    const double lr = lr_at(s, total, cfg);
    EXPECT_LE(lr, previous);
    previous = lr;
  }
}

TEST(Schedule, RejectsOutOfRangeSteps) {
  ClassifierConfig cfg;
  EXPECT_THROW(lr_at(-1, 10, cfg), ContractViolation);
  EXPECT_THROW(lr_at(11, 10, cfg), ContractViolation);
}

TEST(ClassifierConfigTest, DefaultsAndValidation) {
  ClassifierConfig cfg;
  EXPECT_EQ(cfg.input_resolution, 384);
  EXPECT_EQ(cfg.epochs, 50);
  EXPECT_EQ(cfg.warmup_epochs, 10);
  EXPECT_DOUBLE_EQ(cfg.base_lr, 2e-4);
  EXPECT_DOUBLE_EQ(cfg.weight_decay, 1e-4);
  EXPECT_EQ(cfg.batch_size, 64);
  cfg.num_classes = 104;
  EXPECT_NO_THROW(cfg.validate());
  for (double t : {0.0, 1.0, -0.2, 1.5}) {
    auto bad = cfg;
    bad.decision_threshold = t;
    EXPECT_THROW(bad.validate(), ConfigError) << t;
  }
  auto bad = cfg;
  bad.warmup_epochs = 60;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ClassifierConfigTest, JsonRoundTrip) {
  ClassifierConfig cfg;
  cfg.num_classes = 7;
  cfg.decision_threshold = 0.4;
  const auto back = classifier_config_from_json(to_json(cfg));
  EXPECT_EQ(back.num_classes, 7);
  EXPECT_DOUBLE_EQ(back.decision_threshold, 0.4);
}

}  // namespace
}  // namespace foodseg
