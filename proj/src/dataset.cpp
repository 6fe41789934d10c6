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

#include "foodseg/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "foodseg/errors.hpp"
#include "foodseg/hashing.hpp"
#include "foodseg/raster.hpp"

namespace fs = std::filesystem;

namespace foodseg {

ClassCatalog::ClassCatalog(std::vector<ClassEntry> classes, int background_id)
    : classes_(std::move(classes)), background_id_(background_id) {
  if (classes_.empty()) throw ConfigError("class catalog is empty");
  std::sort(classes_.begin(), classes_.end(),
            [](const ClassEntry& a, const ClassEntry& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].id != static_cast<int>(i)) {
      throw ConfigError("class ids must be unique and contiguous from 0; problem at id " +
                        std::to_string(classes_[i].id));
    }
  }
  if (!contains(background_id_)) {
    throw ConfigError("background id " + std::to_string(background_id_) + " is not in the catalog");
  }
}

ClassCatalog ClassCatalog::read(const fs::path& category_file) {
  std::ifstream in(category_file);
  if (!in) throw IngestionError("cannot open " + category_file.string());
  std::vector<ClassEntry> classes;
  std::optional<int> background;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw IngestionError(category_file.string() + ":" + std::to_string(line_no) +
                           ": expected id<TAB>name");
    }
    ClassEntry entry;
    try {
      std::size_t consumed = 0;
      entry.id = std::stoi(line.substr(0, tab), &consumed);
      if (consumed != tab) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw IngestionError(category_file.string() + ":" + std::to_string(line_no) + ": bad class id");
    }
    entry.name = line.substr(tab + 1);
    std::string lowered = entry.name;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "background") background = entry.id;
    classes.push_back(std::move(entry));
  }
  try {
    return ClassCatalog(std::move(classes), background.value_or(0));
  } catch (const ConfigError& e) {
    throw IngestionError(category_file.string() + ": " + e.what());
  }
}

void ClassCatalog::write(const fs::path& category_file) const {
  if (category_file.has_parent_path()) fs::create_directories(category_file.parent_path());
  std::ofstream out(category_file);
  for (const auto& c : classes_) out << c.id << '\t' << c.name << '\n';
}

const std::string& ClassCatalog::name(int id) const {
  require(contains(id), "unknown class id " + std::to_string(id));
  return classes_[static_cast<std::size_t>(id)].name;
}

std::string ClassCatalog::fingerprint() const {
  Fnv1a h;
  for (const auto& c : classes_) {
    h.update(std::to_string(c.id)).update("\t").update(c.name).update("\n");
  }
  h.update("background=").update(std::to_string(background_id_));
  return h.hex();
}

LabelVector derive_image_labels(const cv::Mat& gt_mask, const ClassCatalog& catalog, int min_pixel_count) {
  require(gt_mask.type() == CV_8UC1, "derive_image_labels: mask must be CV_8UC1");
  require(min_pixel_count >= 1, "derive_image_labels: min_pixel_count must be >= 1");
  std::array<std::int64_t, 256> histogram{};
  for (int y = 0; y < gt_mask.rows; ++y) {
    const auto* row = gt_mask.ptr<std::uint8_t>(y);
    for (int x = 0; x < gt_mask.cols; ++x) ++histogram[row[x]];
  }
  LabelVector labels(catalog.size(), 0);
  for (int id = 0; id < 256; ++id) {
    if (histogram[id] == 0) continue;
    if (!catalog.contains(id)) {
      throw IngestionError("mask contains class id " + std::to_string(id) +
                           " which is not in the catalog (max " + std::to_string(catalog.size() - 1) + ")");
    }
    labels[static_cast<std::size_t>(id)] = histogram[id] >= min_pixel_count ? 1 : 0;
  }
  return labels;
}

std::vector<int> positive_classes(const LabelVector& labels) {
  std::vector<int> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (expected train|test)");
}

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace

SplitIndex load_split(const fs::path& root, Split split, const LoadOptions& options) {
  SplitIndex index;
  index.split = split;
  index.catalog = ClassCatalog::read(root / "category.txt");

  const fs::path image_dir = root / "images" / to_string(split);
  const fs::path mask_dir = root / "masks" / to_string(split);

  std::map<std::string, fs::path> images;
  if (fs::is_directory(image_dir)) {
    for (const auto& item : fs::directory_iterator(image_dir)) {
      if (!item.is_regular_file() || !is_image_file(item.path())) continue;
      const std::string stem = item.path().stem().string();
      if (!images.emplace(stem, item.path()).second) {
        throw IngestionError("duplicate image stem '" + stem + "' in " + image_dir.string());
      }
    }
  }
  if (images.empty()) {
    throw IngestionError("split '" + to_string(split) + "' is empty: no images under " + image_dir.string());
  }

  std::vector<std::string> missing;
  for (const auto& [stem, path] : images) {
    if (!fs::exists(mask_dir / (stem + ".png"))) missing.push_back(stem);
  }
  if (options.masks_required && !missing.empty()) {
    std::ostringstream msg;
    msg << "missing mask for " << missing.size() << " image(s) in split '" << to_string(split) << "':";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg << ' ' << missing[i];
    if (missing.size() > 20) msg << " ...";
    throw IngestionError(msg.str());
  }

  index.entries.reserve(images.size());
  for (const auto& [stem, path] : images) {
    DatasetEntry entry;
    entry.image_id = stem;
    entry.image_path = path;
    const cv::Mat pixels = read_color_image(path);
    entry.rows = pixels.rows;
    entry.cols = pixels.cols;
    const fs::path mask_path = mask_dir / (stem + ".png");
    if (fs::exists(mask_path)) {
      const cv::Mat mask = read_label_map(mask_path);
      if (mask.rows != pixels.rows || mask.cols != pixels.cols) {
        throw IngestionError("dimension mismatch for '" + stem + "': image " + std::to_string(pixels.cols) +
                             "x" + std::to_string(pixels.rows) + ", mask " + std::to_string(mask.cols) + "x" +
                             std::to_string(mask.rows));
      }
      try {
        entry.label_vector = derive_image_labels(mask, index.catalog, options.min_pixel_count);
      } catch (const IngestionError& e) {
        throw IngestionError("'" + stem + "': " + e.what());
      }
      entry.mask_path = mask_path;
    } else {
      entry.label_vector.assign(index.catalog.size(), 0);
    }
    index.entries.push_back(std::move(entry));
  }
  return index;
}

LabeledImage materialize(const DatasetEntry& entry) {
  LabeledImage out;
  out.image_id = entry.image_id;
  out.pixels = read_color_image(entry.image_path);
  out.label_vector = entry.label_vector;
  if (entry.mask_path) out.gt_mask = read_label_map(*entry.mask_path);
  return out;
}

nlohmann::json ingestion_report(const std::vector<SplitIndex>& splits) {
  nlohmann::json report;
  report["splits"] = nlohmann::json::object();
  for (const auto& split : splits) {
    std::vector<std::int64_t> frequency(split.catalog.size(), 0);
    std::size_t with_masks = 0;
    for (const auto& e : split.entries) {
      if (e.mask_path) ++with_masks;
      for (std::size_t i = 0; i < e.label_vector.size(); ++i) frequency[i] += e.label_vector[i];
    }
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : split.catalog.classes()) {
      classes.push_back({{"class_id", c.id}, {"name", c.name}, {"images", frequency[static_cast<std::size_t>(c.id)]}});
    }
    report["splits"][to_string(split.split)] = {
        {"count", split.entries.size()},
        {"with_masks", with_masks},
        {"class_frequency", classes},
    };
    report["catalog"] = {{"classes", split.catalog.size()},
                         {"background_id", split.catalog.background_id()},
                         {"fingerprint", split.catalog.fingerprint()}};
  }
  return report;
}

}  // namespace foodseg
