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

#include "foodseg/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace foodseg {

namespace {

constexpr const char* kFooter =
    "IoU per class is computed from pixel counts summed over all evaluated images. Only classes that are both "
    "predicted and present are evaluated; classes without records are left out of the mean. A class whose "
    "prediction and ground truth are both empty scores 1.0. Background is excluded.";

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

EvaluationReport build_report(std::span<const EvalRecord> records, std::span<const MaskProposalSet> sets,
                              std::size_t n_images, const ClassCatalog& catalog, const SegmenterConfig& cfg) {
  EvaluationReport report;
  report.input_mode = cfg.input_mode;
  report.mask_strategy = cfg.mask_strategy;
  report.result = miou(records, catalog, /*exclude_background=*/true);
  report.n_images = n_images;
  for (const auto& s : sets) {
    if (s.class_id == catalog.background_id()) continue;
    ++report.n_proposal_sets;
    report.n_masks += s.masks.size();
  }
  return report;
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : report.result.classes) {
    classes.push_back({{"class_id", c.class_id},
                       {"name", c.name},
                       {"n_records", c.n_records},
                       {"iou", c.iou},
                       {"tp", c.counts.tp},
                       {"fp", c.counts.fp},
                       {"fn", c.counts.fn}});
  }
  nlohmann::json summary = {
      {"input_mode", to_string(report.input_mode)},
      {"mask_strategy", to_string(report.mask_strategy)},
      {"mIoU", report.result.miou ? nlohmann::json(*report.result.miou) : nlohmann::json(nullptr)},
      {"status", report.result.empty() ? "EmptyEvaluation" : "ok"},
      {"evaluated_classes", report.result.evaluated_classes()},
      {"n_images", report.n_images},
      {"n_mask_proposals", report.n_proposal_sets},
      {"n_candidate_masks", report.n_masks},
      {"masks_per_image", report.masks_per_image()},
  };
  return {{"summary", summary}, {"classes", classes}, {"notes", kFooter}};
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport report;
  const auto& s = j.at("summary");
  report.input_mode = parse_input_mode(s.at("input_mode").get<std::string>());
  report.mask_strategy = parse_mask_strategy(s.at("mask_strategy").get<std::string>());
  if (!s.at("mIoU").is_null()) report.result.miou = s.at("mIoU").get<double>();
  report.n_images = s.at("n_images").get<std::size_t>();
  report.n_proposal_sets = s.at("n_mask_proposals").get<std::size_t>();
  report.n_masks = s.at("n_candidate_masks").get<std::size_t>();
  for (const auto& c : j.at("classes")) {
    ClassIou entry;
    entry.class_id = c.at("class_id").get<int>();
    entry.name = c.at("name").get<std::string>();
    entry.n_records = c.at("n_records").get<std::size_t>();
    entry.iou = c.at("iou").get<double>();
    entry.counts = {entry.class_id, c.value("tp", std::uint64_t{0}), c.value("fp", std::uint64_t{0}),
                    c.value("fn", std::uint64_t{0})};
    report.result.classes.push_back(std::move(entry));
  }
  return report;
}

std::string to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "class_id,name,n_records,iou\n";
  char buf[64];
  for (const auto& c : report.result.classes) {
    std::snprintf(buf, sizeof(buf), "%.6f", c.iou);
    out << c.class_id << ',' << csv_escape(c.name) << ',' << c.n_records << ',' << buf << '\n';
  }
  return out.str();
}

std::string to_markdown(std::span<const EvaluationReport> reports, std::size_t top_k) {
  std::ostringstream out;
  if (reports.empty()) return "";
  std::vector<ClassIou> ranked = reports.front().result.classes;
  std::stable_sort(ranked.begin(), ranked.end(), [](const ClassIou& a, const ClassIou& b) {
    return a.n_records != b.n_records ? a.n_records > b.n_records : a.class_id < b.class_id;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);

  out << "| Input image | Mask strategy | mIoU |";
  for (const auto& c : ranked) out << ' ' << c.name << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < ranked.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& r : reports) {
    const std::string input = r.input_mode == InputMode::kOriginal ? "Original (no preprocessing)"
                                                                    : "Smoothed (Gaussian blur)";
    const std::string strategy = r.mask_strategy == MaskStrategy::kSingle ? "Single" : "Multi";
    out << "| " << input << " | " << strategy << " | " << (r.result.miou ? fixed2(*r.result.miou) : "n/a") << " |";
    for (const auto& c : ranked) {
      const auto it = std::find_if(r.result.classes.begin(), r.result.classes.end(),
                                   [&](const ClassIou& x) { return x.class_id == c.class_id; });
      out << ' ' << (it == r.result.classes.end() ? "-" : fixed2(it->iou)) << " |";
    }
    out << '\n';
  }
  out << '\n';
  for (const auto& r : reports) {
    out << "- " << to_string(r.input_mode) << "/" << to_string(r.mask_strategy) << ": "
        << r.result.evaluated_classes() << " classes, " << r.n_proposal_sets << " mask proposals ("
        << r.n_masks << " candidate masks) over " << r.n_images << " images, " << fixed2(r.masks_per_image())
        << " per image\n";
  }
  out << '\n' << kFooter << '\n';
  return out.str();
}

void write_report_files(const fs::path& dir, const EvaluationReport& report) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    out << to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "report.csv");
    out << to_csv(report);
  }
  {
    std::ofstream out(dir / "report.md");
    const EvaluationReport one[] = {report};
    out << to_markdown(one);
  }
}

}  // namespace foodseg
