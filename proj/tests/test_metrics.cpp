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

#include <random>

#include <gtest/gtest.h>

#include "foodseg/errors.hpp"
#include "foodseg/metrics.hpp"
#include "foodseg/report.hpp"

namespace foodseg {
namespace {

BinaryMask mask_from(std::initializer_list<int> bits, int rows, int cols) {
  std::vector<std::uint8_t> v(bits.begin(), bits.end());
  return BinaryMask(rows, cols, v);
}

ClassCatalog catalog4() { return ClassCatalog({{0, "background"}, {1, "a"}, {2, "b"}, {3, "c"}}, 0); }

TEST(Iou, HandComputed) {
  const auto pred = mask_from({1, 1, 0, 0}, 2, 2);
  const auto gt = mask_from({0, 1, 1, 0}, 2, 2);
  EXPECT_DOUBLE_EQ(iou(pred, gt), 1.0 / 3.0);
  const auto c = confusion(pred, gt, 4);
  EXPECT_EQ(c, (ConfusionCounts{4, 1, 1, 1}));
}

TEST(Iou, BothEmptyIsOne) { EXPECT_DOUBLE_EQ(iou(BinaryMask(3, 3), BinaryMask(3, 3)), 1.0); }

TEST(Iou, ShapeMismatchThrows) { EXPECT_THROW(iou(BinaryMask(3, 3), BinaryMask(3, 4)), ContractViolation); }

TEST(Miou, SumsCountsBeforeDividing) {
  // Class 1: image a has tp=1 fp=0 fn=0; image b has tp=0 fp=0 fn=3.
  std::vector<EvalRecord> records = {
      {"a", 1, 0, 1.0, {1, 1, 0, 0}},
      {"b", 1, 0, 0.0, {1, 0, 0, 3}},
      {"a", 2, 0, 0.5, {2, 2, 1, 1}},
  };
  const auto r = miou(records, catalog4());
  ASSERT_EQ(r.classes.size(), 2u);
  EXPECT_DOUBLE_EQ(r.classes[0].iou, 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.classes[1].iou, 0.5);
  EXPECT_DOUBLE_EQ(*r.miou, (0.25 + 0.5) / 2.0);
  EXPECT_EQ(r.classes[0].n_records, 2u);
}

TEST(Miou, EmptyEvaluationHasNoMean) {
  const auto r = miou({}, catalog4());
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.evaluated_classes(), 0u);
}

TEST(Miou, BackgroundExcluded) {
  std::vector<EvalRecord> records = {{"a", 0, 0, 0.0, {0, 0, 5, 5}}, {"a", 3, 0, 1.0, {3, 4, 0, 0}}};
  const auto r = miou(records, catalog4());
  ASSERT_EQ(r.classes.size(), 1u);
  EXPECT_DOUBLE_EQ(*r.miou, 1.0);
}

TEST(BestCase, PicksHighestIouLowerIndexOnTies) {
  MaskProposalSet set;
  set.image_id = "x";
  set.class_id = 2;
  const auto gt = mask_from({1, 1, 0, 0}, 2, 2);
  set.masks = {mask_from({1, 0, 0, 0}, 2, 2), mask_from({1, 1, 0, 0}, 2, 2), mask_from({1, 1, 0, 0}, 2, 2)};
  set.scores = {0.9, 0.5, 0.4};
  const auto rec = best_case_select(set, gt);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->chosen_mask_index, 1);
  EXPECT_DOUBLE_EQ(rec->iou, 1.0);
  EXPECT_EQ(rec->class_id, 2);
  EXPECT_EQ(rec->counts.class_id, 2);
}

TEST(BestCase, EmptySetSignalsEmptyProposal) {
  MaskProposalSet set;
  EXPECT_FALSE(best_case_select(set, BinaryMask(2, 2)).has_value());
}

TEST(TpFilter, IntersectsPredictionWithPresence) {
  PredictionResult p;
  p.predicted_classes = {1, 2};
  EXPECT_EQ(tp_filter(p, {1, 0, 1, 1}), (std::vector<int>{2}));
}

TEST(EvalRecordJson, RoundTrip) {
  const EvalRecord r{"img", 3, 1, 0.25, {3, 1, 2, 1}};
  const auto back = eval_record_from_json(to_json(r));
  EXPECT_EQ(back.image_id, "img");
  EXPECT_EQ(back.counts, r.counts);
  EXPECT_EQ(back.chosen_mask_index, 1);
}

TEST(Report, CountsBothProposalNotions) {
  std::vector<EvalRecord> records = {{"a", 1, 0, 1.0, {1, 4, 0, 0}}};
  MaskProposalSet s;
  s.image_id = "a";
  s.class_id = 1;
  s.masks = {BinaryMask(2, 2), BinaryMask(2, 2), BinaryMask(2, 2)};
  s.scores = {0.9, 0.8, 0.7};
  std::vector<MaskProposalSet> sets = {s};
  const auto report = build_report(records, sets, 2, catalog4(), SegmenterConfig{});
  const auto j = to_json(report);
  EXPECT_EQ(j["summary"]["n_mask_proposals"], 1);
  EXPECT_EQ(j["summary"]["n_candidate_masks"], 3);
  EXPECT_DOUBLE_EQ(j["summary"]["masks_per_image"].get<double>(), 0.5);
  EXPECT_EQ(j["summary"]["status"], "ok");
  const auto back = report_from_json(j);
  EXPECT_DOUBLE_EQ(*back.result.miou, 1.0);
  EXPECT_NE(to_csv(report).find("1,a,1,1.000000"), std::string::npos);
}

TEST(Report, EmptyEvaluationStatus) {
  const auto report = build_report({}, {}, 0, catalog4(), SegmenterConfig{});
  const auto j = to_json(report);
  EXPECT_TRUE(j["summary"]["mIoU"].is_null());
  EXPECT_EQ(j["summary"]["status"], "EmptyEvaluation");
}

TEST(Report, MarkdownHasOneRowPerSetting) {
  std::vector<EvaluationReport> reports(2);
  reports[1].input_mode = InputMode::kSmoothed;
  reports[1].mask_strategy = MaskStrategy::kSingle;
  const auto md = to_markdown(reports);
  EXPECT_NE(md.find("Original (no preprocessing) | Multi | n/a"), std::string::npos);
  EXPECT_NE(md.find("Smoothed (Gaussian blur) | Single"), std::string::npos);
}

}  // namespace
}  // namespace foodseg
