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

#include "foodseg/metrics.hpp"

#include <algorithm>
#include <map>

#include "foodseg/errors.hpp"

namespace foodseg {

double ConfusionCounts::iou() const {
  const std::uint64_t denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

nlohmann::json to_json(const EvalRecord& r) {
  return {{"image_id", r.image_id},
          {"class_id", r.class_id},
          {"chosen_mask_index", r.chosen_mask_index},
          {"iou", r.iou},
          {"tp", r.counts.tp},
          {"fp", r.counts.fp},
          {"fn", r.counts.fn}};
}

EvalRecord eval_record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.class_id = j.at("class_id").get<int>();
  r.chosen_mask_index = j.at("chosen_mask_index").get<int>();
  r.iou = j.at("iou").get<double>();
  r.counts = {r.class_id, j.at("tp").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(),
              j.at("fn").get<std::uint64_t>()};
  return r;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, int class_id) {
  if (!pred.same_shape(gt)) {
    throw ContractViolation("mask dimensions differ: " + std::to_string(pred.rows()) + "x" +
                            std::to_string(pred.cols()) + " vs " + std::to_string(gt.rows()) + "x" +
                            std::to_string(gt.cols()));
  }
  ConfusionCounts c;
  c.class_id = class_id;
  const auto& p = pred.bits();
  const auto& g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.tp += p[i] & g[i];
    c.fp += p[i] & (g[i] ^ 1);
    c.fn += (p[i] ^ 1) & g[i];
  }
  return c;
}

double iou(const BinaryMask& pred, const BinaryMask& gt) { return confusion(pred, gt).iou(); }

std::optional<EvalRecord> best_case_select(const MaskProposalSet& proposals, const BinaryMask& gt) {
  if (proposals.masks.empty()) return std::nullopt;
  EvalRecord best;
  best.image_id = proposals.image_id;
  best.class_id = proposals.class_id;
  for (std::size_t i = 0; i < proposals.masks.size(); ++i) {
    const ConfusionCounts counts = confusion(proposals.masks[i], gt, proposals.class_id);
    const double value = counts.iou();
    if (i == 0 || value > best.iou) {
      best.chosen_mask_index = static_cast<int>(i);
      best.iou = value;
      best.counts = counts;
    }
  }
  return best;
}

MiouResult miou(std::span<const EvalRecord> records, const ClassCatalog& catalog, bool exclude_background) {
  std::map<int, ClassIou> per_class;
  for (const auto& r : records) {
    require(catalog.contains(r.class_id), "miou: record for unknown class " + std::to_string(r.class_id));
    if (exclude_background && r.class_id == catalog.background_id()) continue;
    auto& entry = per_class[r.class_id];
    entry.class_id = r.class_id;
    entry.counts.class_id = r.class_id;
    entry.counts += r.counts;
    ++entry.n_records;
  }
  MiouResult result;
  if (per_class.empty()) return result;
  double sum = 0.0;
  for (auto& [id, entry] : per_class) {
    entry.name = catalog.name(id);
    entry.iou = entry.counts.iou();
    sum += entry.iou;
    result.classes.push_back(entry);
  }
  result.miou = sum / static_cast<double>(result.classes.size());
  return result;
}

std::vector<int> tp_filter(const PredictionResult& prediction, const LabelVector& gt_labels) {
  std::vector<int> out;
  for (int c : prediction.predicted_classes) {
    if (c >= 0 && static_cast<std::size_t>(c) < gt_labels.size() && gt_labels[static_cast<std::size_t>(c)]) {
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace foodseg
