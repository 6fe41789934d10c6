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

#include "foodseg/review.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include <spdlog/spdlog.h>

#include "foodseg/raster.hpp"

namespace fs = std::filesystem;

namespace foodseg {

namespace {

std::string join_messages(const std::vector<FieldError>& errors) {
  std::string out = "invalid decision:";
  for (const auto& e : errors) out += " " + e.field + ": " + e.message + ";";
  return out;
}

ReviewDecision decision_from_log(const nlohmann::json& j) {
  ReviewDecision d = parse_decision(j);
  d.decided_at = j.value("decided_at", std::string{});
  return d;
}

}  // namespace

std::string to_string(DecisionKind kind) { return kind == DecisionKind::kAccept ? "accept" : "reject_all"; }

nlohmann::json to_json(const ReviewDecision& d) {
  nlohmann::json j = {{"image_id", d.image_id},
                      {"class_id", d.class_id},
                      {"decision", to_string(d.kind)},
                      {"reviewer", d.reviewer},
                      {"decided_at", d.decided_at}};
  j["mask_index"] = d.kind == DecisionKind::kAccept ? nlohmann::json(d.mask_index) : nlohmann::json(nullptr);
  return j;
}

ValidationError::ValidationError(std::vector<FieldError> errors)
    : std::invalid_argument(join_messages(errors)), errors_(std::move(errors)) {}

ReviewDecision parse_decision(const nlohmann::json& body) {
  if (!body.is_object()) throw ValidationError(std::vector<FieldError>{{"body", "expected a JSON object"}});
  std::vector<FieldError> errors;
  ReviewDecision d;

  const auto image = body.find("image_id");
  if (image == body.end() || !image->is_string() || image->get<std::string>().empty()) {
    errors.push_back({"image_id", "required non-empty string"});
  } else {
    d.image_id = image->get<std::string>();
  }
  const auto cls = body.find("class_id");
  if (cls == body.end() || !cls->is_number_integer()) {
    errors.push_back({"class_id", "required integer"});
  } else {
    d.class_id = cls->get<int>();
  }
  const auto reviewer = body.find("reviewer");
  if (reviewer == body.end() || !reviewer->is_string() || reviewer->get<std::string>().empty()) {
    errors.push_back({"reviewer", "required non-empty string"});
  } else {
    d.reviewer = reviewer->get<std::string>();
  }

  const auto kind = body.find("decision");
  const auto index = body.find("mask_index");
  const bool has_index = index != body.end() && !index->is_null();
  if (kind == body.end() || !kind->is_string()) {
    errors.push_back({"decision", "required, one of accept, reject_all"});
  } else if (kind->get<std::string>() == "accept") {
    d.kind = DecisionKind::kAccept;
    if (!has_index || !index->is_number_integer()) {
      errors.push_back({"mask_index", "required integer for accept"});
    } else if (index->get<long long>() < 0) {
      errors.push_back({"mask_index", "must be >= 0"});
    } else {
      d.mask_index = static_cast<int>(std::min<long long>(index->get<long long>(), 1 << 30));
    }
  } else if (kind->get<std::string>() == "reject_all") {
    d.kind = DecisionKind::kRejectAll;
    if (has_index) errors.push_back({"mask_index", "must be absent for reject_all"});
  } else {
    errors.push_back({"decision", "must be accept or reject_all"});
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));
  return d;
}

nlohmann::json to_json(const ExportSummary& s) {
  return {{"root", s.root.string()}, {"images", s.images},       {"accepted", s.accepted},
          {"rejected", s.rejected},  {"undecided", s.undecided}, {"occluded", s.occluded}};
}

ReviewStore::ReviewStore(fs::path run_dir, Clock clock)
    : run_dir_(std::move(run_dir)), clock_(std::move(clock)) {
  manifest_ = read_manifest(run_dir_);
  catalog_ = ClassCatalog::read(run_dir_ / "category.txt");
  proposals_ = read_proposals(run_dir_);
  for (std::size_t i = 0; i < proposals_.size(); ++i) index_[{proposals_[i].image_id, proposals_[i].class_id}] = i;

  std::ifstream log(run_dir_ / "decisions.jsonl");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(log, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto d = decision_from_log(nlohmann::json::parse(line));
      history_[{d.image_id, d.class_id}].push_back(std::move(d));
    } catch (const std::exception& e) {
      spdlog::warn("{}: skipping decisions.jsonl line {}: {}", run_dir_.string(), line_no, e.what());
    }
  }
}

const MaskProposalSet* ReviewStore::find(const std::string& image_id, int class_id) const {
  const auto it = index_.find({image_id, class_id});
  return it == index_.end() ? nullptr : &proposals_[it->second];
}

std::vector<QueueItem> ReviewStore::queue() const {
  std::shared_lock lock(mutex_);
  std::vector<QueueItem> items;
  for (const auto& set : proposals_) {
    if (history_.count({set.image_id, set.class_id})) continue;
    items.push_back({set.image_id, set.class_id, set.top_score(), set.masks.size()});
  }
  std::stable_sort(items.begin(), items.end(), [](const QueueItem& a, const QueueItem& b) {
    return std::tie(a.top_score, a.image_id, a.class_id) < std::tie(b.top_score, b.image_id, b.class_id);
  });
  return items;
}

std::size_t ReviewStore::decided() const {
  std::shared_lock lock(mutex_);
  return history_.size();
}

std::optional<ReviewDecision> ReviewStore::current(const std::string& image_id, int class_id) const {
  std::shared_lock lock(mutex_);
  const auto it = history_.find({image_id, class_id});
  if (it == history_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::vector<ReviewDecision> ReviewStore::history(const std::string& image_id, int class_id) const {
  std::shared_lock lock(mutex_);
  const auto it = history_.find({image_id, class_id});
  return it == history_.end() ? std::vector<ReviewDecision>{} : it->second;
}

ReviewDecision ReviewStore::record(ReviewDecision decision) {
  const MaskProposalSet* set = find(decision.image_id, decision.class_id);
  if (set == nullptr) {
    throw NotFoundError("no proposal set for image '" + decision.image_id + "' class " +
                        std::to_string(decision.class_id));
  }
  if (decision.kind == DecisionKind::kAccept &&
      (decision.mask_index < 0 || decision.mask_index >= static_cast<int>(set->masks.size()))) {
    throw ValidationError(std::vector<FieldError>{{"mask_index", "must be in [0, " + std::to_string(set->masks.size()) + ")"}});
  }
  if (decision.kind == DecisionKind::kRejectAll) decision.mask_index = -1;

  std::unique_lock lock(mutex_);
  if (decision.decided_at.empty()) decision.decided_at = clock_();
  std::ofstream log(run_dir_ / "decisions.jsonl", std::ios::app | std::ios::binary);
  log << to_json(decision).dump() << '\n';
  log.flush();
  if (!log) throw std::runtime_error("failed to append to decisions.jsonl");
  history_[{decision.image_id, decision.class_id}].push_back(decision);
  return decision;
}

ExportSummary ReviewStore::export_dataset(const fs::path& out_root, Split split) const {
  std::shared_lock lock(mutex_);
  ExportSummary summary;
  summary.root = out_root;

  struct Accepted {
    const BinaryMask* mask;
    double score;
    int class_id;
  };
  std::map<std::string, std::vector<Accepted>> per_image;
  for (const auto& set : proposals_) {
    const auto it = history_.find({set.image_id, set.class_id});
    if (it == history_.end() || it->second.empty()) {
      ++summary.undecided;
      continue;
    }
    const ReviewDecision& d = it->second.back();
    if (d.kind == DecisionKind::kRejectAll) {
      ++summary.rejected;
      continue;
    }
    ++summary.accepted;
    per_image[set.image_id].push_back({&set.masks[d.mask_index], set.scores[d.mask_index], set.class_id});
  }

  const std::string split_name = to_string(split);
  fs::remove_all(out_root / "images" / split_name);
  fs::remove_all(out_root / "masks" / split_name);
  fs::create_directories(out_root / "images" / split_name);
  fs::create_directories(out_root / "masks" / split_name);
  catalog_.write(out_root / "category.txt");

  for (auto& [image_id, accepted] : per_image) {
    const cv::Mat image = read_color_image(run_dir_ / "images" / (image_id + ".png"));
    cv::Mat labels(image.rows, image.cols, CV_8UC1, cv::Scalar(catalog_.background_id()));
    // Paint lowest priority first so the strongest mask ends on top.
    std::sort(accepted.begin(), accepted.end(), [](const Accepted& a, const Accepted& b) {
      return a.score != b.score ? a.score < b.score : a.class_id > b.class_id;
    });
    for (const auto& a : accepted) {
      require(a.mask->rows() == image.rows && a.mask->cols() == image.cols, "mask shape differs from image");
      for (int y = 0; y < image.rows; ++y) {
        auto* row = labels.ptr<std::uint8_t>(y);
        for (int x = 0; x < image.cols; ++x) {
          if (a.mask->at(y, x)) row[x] = static_cast<std::uint8_t>(a.class_id);
        }
      }
    }
    for (const auto& a : accepted) {
      if (cv::countNonZero(labels == a.class_id) == 0) ++summary.occluded;
    }
    write_png(out_root / "images" / split_name / (image_id + ".png"), image);
    write_png(out_root / "masks" / split_name / (image_id + ".png"), labels);
    ++summary.images;
  }
  spdlog::info("exported {} images ({} accepted, {} rejected, {} undecided) to {}", summary.images,
               summary.accepted, summary.rejected, summary.undecided, out_root.string());
  return summary;
}

}  // namespace foodseg
