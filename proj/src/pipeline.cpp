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

#include "foodseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "foodseg/cam.hpp"
#include "foodseg/errors.hpp"
#include "foodseg/hashing.hpp"
#include "foodseg/raster.hpp"

namespace fs = std::filesystem;

namespace foodseg {

namespace {

std::string iso8601(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string status_for(const std::vector<SkippedClass>& skipped, std::size_t produced, std::size_t prompted) {
  if (produced > 0 || prompted == 0) return "done";
  return "skipped:" + std::string(to_string(skipped.front().reason));
}

SkipReason parse_skip(const std::string& text) {
  if (text == "NoActivation") return SkipReason::kNoActivation;
  if (text == "EmptyProposal") return SkipReason::kEmptyProposal;
  throw ContractViolation("unknown skip reason '" + text + "'");
}

// One object per line inside a JSON array, so manifests diff cleanly.
template <typename T>
void write_json_lines_array(const fs::path& path, const std::vector<T>& items) {
  std::ofstream out(path, std::ios::binary);
  out << "[";
  for (std::size_t i = 0; i < items.size(); ++i) out << (i == 0 ? "\n" : ",\n") << to_json(items[i]).dump();
  out << (items.empty() ? "]\n" : "\n]\n");
  if (!out) throw std::runtime_error("failed to write " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

struct ImageOutcome {
  ImageStatus status;
  std::vector<MaskProposalSet> sets;
  std::vector<EvalRecord> records;
};

ImageOutcome process_image(const DatasetEntry& entry, const MultiLabelClassifier& model,
                           PromptableSegmenter& backend, std::mutex& backend_mutex, const RunOptions& options,
                           const fs::path& run_dir) {
  ImageOutcome out;
  out.status.image_id = entry.image_id;
  const LabeledImage sample = materialize(entry);
  const bool auto_eval = options.mode == RunMode::kAutoEval;
  if (auto_eval && !sample.gt_mask) throw IngestionError("auto-eval needs a ground-truth mask");

  const PredictionResult prediction = predict(sample.pixels, model, options.decision_threshold, entry.image_id);
  const std::vector<int> classes =
      auto_eval ? tp_filter(prediction, sample.label_vector) : prediction.predicted_classes;
  out.status.prompt_classes = classes;

  write_png(run_dir / "images" / (entry.image_id + ".png"), sample.pixels);

  std::vector<PointPrompt> prompts;
  const auto cams = compute_cams(sample.pixels, model, classes);
  for (const auto& cam : cams) {
    const auto prompt = select_prompt(cam);
    if (options.dump_cams) write_cam_dump(run_dir / "cams", entry.image_id, cam, prompt);
    if (prompt) {
      prompts.push_back(*prompt);
    } else {
      out.status.skipped.push_back({cam.class_id, SkipReason::kNoActivation});
    }
  }

  SegmentationResult seg;
  {
    std::lock_guard lock(backend_mutex);
    seg = run_segmentation(sample.pixels, entry.image_id, prompts, options.segmenter, backend);
  }
  for (const auto& [class_id, reason] : seg.skipped) out.status.skipped.push_back({class_id, reason});

  for (auto& set : seg.sets) {
    if (auto_eval) {
      const auto record = best_case_select(set, BinaryMask::from_label(*sample.gt_mask, set.class_id));
      if (!record) {
        out.status.skipped.push_back({set.class_id, SkipReason::kEmptyProposal});
        continue;
      }
      out.records.push_back(*record);
    }
    out.sets.push_back(std::move(set));
  }
  std::sort(out.status.skipped.begin(), out.status.skipped.end(),
            [](const SkippedClass& a, const SkippedClass& b) { return a.class_id < b.class_id; });
  out.status.proposal_sets = out.sets.size();
  out.status.status = status_for(out.status.skipped, out.sets.size(), classes.size());
  return out;
}

}  // namespace

std::string to_string(RunMode mode) { return mode == RunMode::kAutoEval ? "auto-eval" : "review"; }

RunMode parse_run_mode(const std::string& text) {
  if (text == "auto-eval") return RunMode::kAutoEval;
  if (text == "review" || text == "propose-for-review") return RunMode::kProposeForReview;
  throw ConfigError("unknown run mode '" + text + "' (expected auto-eval or review)");
}

Clock system_clock() {
  return [] {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
      return iso8601(static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10)));
    }
    return iso8601(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
  };
}

Clock fixed_clock(std::string timestamp) {
  return [timestamp = std::move(timestamp)] { return timestamp; };
}

std::size_t RunManifest::count(const std::string& status) const {
  return static_cast<std::size_t>(
      std::count_if(images.begin(), images.end(), [&](const ImageStatus& s) { return s.status == status; }));
}

std::size_t RunManifest::prompt_classes_total() const {
  std::size_t n = 0;
  for (const auto& s : images) {
    if (s.status != "failed") n += s.prompt_classes.size();
  }
  return n;
}

std::size_t RunManifest::skipped_total() const {
  std::size_t n = 0;
  for (const auto& s : images) n += s.skipped.size();
  return n;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json images = nlohmann::json::array();
  std::size_t produced = 0;
  for (const auto& s : m.images) {
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& k : s.skipped) skipped.push_back({{"class_id", k.class_id}, {"reason", to_string(k.reason)}});
    nlohmann::json entry = {{"image_id", s.image_id},
                            {"status", s.status},
                            {"prompt_classes", s.prompt_classes},
                            {"skipped", skipped},
                            {"proposal_sets", s.proposal_sets}};
    if (!s.error.empty()) entry["error"] = s.error;
    images.push_back(std::move(entry));
    produced += s.proposal_sets;
  }
  const std::size_t failed = m.count("failed");
  const std::size_t prompted = m.prompt_classes_total();
  const std::size_t skipped = m.skipped_total();
  return {
      {"run_id", m.run_id},
      {"mode", to_string(m.mode)},
      {"dataset", {{"root", m.dataset_root}, {"split", m.split}, {"fingerprint", m.dataset_fingerprint}}},
      {"classifier", {{"fingerprint", m.classifier_fingerprint}, {"decision_threshold", m.decision_threshold}}},
      {"segmenter", to_json(m.segmenter)},
      {"backend", m.backend},
      {"started_at", m.started_at},
      {"finished_at", m.finished_at},
      {"summary",
       {{"images", m.images.size()},
        {"done", m.count("done")},
        {"failed", failed},
        {"skipped_no_activation", m.count("skipped:NoActivation")},
        {"skipped_empty_proposal", m.count("skipped:EmptyProposal")},
        {"flagged", m.flagged}}},
      {"conservation",
       {{"prompt_classes", prompted},
        {"skipped", skipped},
        {"outputs", produced},
        {"balanced", prompted == produced + skipped}}},
      {"images", images},
  };
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.mode = parse_run_mode(j.at("mode").get<std::string>());
  m.dataset_root = j.at("dataset").at("root").get<std::string>();
  m.split = j.at("dataset").at("split").get<std::string>();
  m.dataset_fingerprint = j.at("dataset").at("fingerprint").get<std::string>();
  m.classifier_fingerprint = j.at("classifier").at("fingerprint").get<std::string>();
  m.decision_threshold = j.at("classifier").at("decision_threshold").get<double>();
  m.segmenter = segmenter_config_from_json(j.at("segmenter"));
  m.backend = j.at("backend").get<std::string>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  m.flagged = j.at("summary").at("flagged").get<bool>();
  for (const auto& e : j.at("images")) {
    ImageStatus s;
    s.image_id = e.at("image_id").get<std::string>();
    s.status = e.at("status").get<std::string>();
    s.error = e.value("error", std::string{});
    s.prompt_classes = e.at("prompt_classes").get<std::vector<int>>();
    s.proposal_sets = e.at("proposal_sets").get<std::size_t>();
    for (const auto& k : e.at("skipped")) {
      s.skipped.push_back({k.at("class_id").get<int>(), parse_skip(k.at("reason").get<std::string>())});
    }
    m.images.push_back(std::move(s));
  }
  return m;
}

std::string dataset_fingerprint(const SplitIndex& split) {
  Fnv1a h;
  h.update(split.catalog.fingerprint()).update(to_string(split.split));
  for (const auto& e : split.entries) {
    h.update(e.image_id).update(static_cast<std::uint64_t>(e.rows)).update(static_cast<std::uint64_t>(e.cols));
    h.update(std::span<const std::uint8_t>(e.label_vector));
  }
  return h.hex();
}

std::string classifier_fingerprint(const MultiLabelClassifier& model) {
  Fnv1a h;
  h.update(model.backbone().spec().dump());
  h.update(static_cast<std::uint64_t>(model.num_classes())).update(static_cast<std::uint64_t>(model.background_id()));
  for (const Parameter* p : model.parameters()) {
    h.update(p->name);
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(p->value.data());
    h.update(std::span<const std::uint8_t>(bytes, static_cast<std::size_t>(p->value.size()) * sizeof(float)));
  }
  return h.hex();
}

RunOutput run_batch(const SplitIndex& split, const fs::path& dataset_root, const MultiLabelClassifier& model,
                    PromptableSegmenter& backend, const RunOptions& options) {
  options.segmenter.validate();
  if (!(options.decision_threshold > 0.0 && options.decision_threshold < 1.0)) {
    throw ConfigError("decision_threshold must lie in (0, 1)");
  }
  if (options.artifacts_root.empty()) throw ConfigError("artifacts_root is required");
  if (model.num_classes() != static_cast<int>(split.catalog.size())) {
    throw ConfigError("model has " + std::to_string(model.num_classes()) + " outputs but the catalog has " +
                      std::to_string(split.catalog.size()) + " classes");
  }
  require_cam_support(model);

  RunManifest manifest;
  manifest.mode = options.mode;
  manifest.dataset_root = dataset_root.string();
  manifest.split = to_string(split.split);
  manifest.dataset_fingerprint = dataset_fingerprint(split);
  manifest.classifier_fingerprint = classifier_fingerprint(model);
  manifest.decision_threshold = options.decision_threshold;
  manifest.segmenter = options.segmenter;
  manifest.backend = backend.name();

  Fnv1a id;
  id.update(manifest.dataset_fingerprint).update(manifest.classifier_fingerprint);
  id.update(to_json(options.segmenter).dump()).update(to_string(options.mode)).update(manifest.backend);
  id.update(std::to_string(options.decision_threshold));
  manifest.run_id = "run-" + id.hex();

  RunOutput output;
  output.run_dir = options.artifacts_root / "runs" / manifest.run_id;
  if (fs::exists(output.run_dir / "manifest.json")) {
    if (!options.overwrite) throw ConfigError("run " + manifest.run_id + " already exists");
    fs::remove_all(output.run_dir);
  }
  fs::create_directories(output.run_dir / "images");
  split.catalog.write(output.run_dir / "category.txt");

  manifest.started_at = options.clock();
  spdlog::info("run {} ({}, {}/{}, k={}) over {} images", manifest.run_id, to_string(options.mode),
               to_string(options.segmenter.input_mode), to_string(options.segmenter.mask_strategy),
               options.segmenter.k_proposals, split.entries.size());

  std::vector<ImageOutcome> outcomes(split.entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex backend_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < split.entries.size(); i = next++) {
      const auto& entry = split.entries[i];
      try {
        outcomes[i] = process_image(entry, model, backend, backend_mutex, options, output.run_dir);
      } catch (const std::exception& e) {
        spdlog::warn("image {} failed: {}", entry.image_id, e.what());
        outcomes[i] = {};
        outcomes[i].status.image_id = entry.image_id;
        outcomes[i].status.status = "failed";
        outcomes[i].status.error = e.what();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(options.workers, static_cast<int>(split.entries.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (auto& o : outcomes) {
    manifest.images.push_back(std::move(o.status));
    for (auto& s : o.sets) output.proposals.push_back(std::move(s));
    for (auto& r : o.records) output.records.push_back(std::move(r));
  }
  const std::size_t failed = manifest.count("failed");
  manifest.flagged = !split.entries.empty() &&
                     static_cast<double>(failed) > options.failure_flag_ratio * static_cast<double>(split.entries.size());
  if (manifest.flagged) spdlog::error("run {} flagged: {} of {} images failed", manifest.run_id, failed, split.entries.size());

  write_json_lines_array(output.run_dir / "proposals.json", output.proposals);
  if (options.mode == RunMode::kAutoEval) {
    write_json_lines_array(output.run_dir / "records.json", output.records);
    output.report = build_report(output.records, output.proposals, split.entries.size(), split.catalog, options.segmenter);
    write_report_files(output.run_dir, *output.report);
  }
  manifest.finished_at = options.clock();
  {
    std::ofstream out(output.run_dir / "manifest.json", std::ios::binary);
    out << to_json(manifest).dump(2) << '\n';
  }
  output.manifest = std::move(manifest);
  return output;
}

RunManifest read_manifest(const fs::path& run_dir) { return manifest_from_json(read_json(run_dir / "manifest.json")); }

std::vector<MaskProposalSet> read_proposals(const fs::path& run_dir) {
  std::vector<MaskProposalSet> sets;
  for (const auto& j : read_json(run_dir / "proposals.json")) sets.push_back(proposal_set_from_json(j));
  return sets;
}

}  // namespace foodseg
