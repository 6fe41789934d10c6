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

// foodseg command line: synth, ingest, train, run, report, serve.

#include <csignal>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "foodseg/backends.hpp"
#include "foodseg/dataset.hpp"
#include "foodseg/errors.hpp"
#include "foodseg/model.hpp"
#include "foodseg/pipeline.hpp"
#include "foodseg/report.hpp"
#include "foodseg/service.hpp"
#include "foodseg/synthetic.hpp"
#include "foodseg/trainer.hpp"

namespace fs = std::filesystem;
using namespace foodseg;

namespace {

ReviewService* g_service = nullptr;

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

void write_or_print(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out);
  file << text;
  if (!file) throw std::runtime_error("failed to write " + out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised food segmentation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  ShapesDatasetSpec shapes;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate the colored-shapes dataset");
  synth->add_option("--out", synth_out, "Dataset root")->required();
  synth->add_option("--train", shapes.train_images, "Train images");
  synth->add_option("--test", shapes.test_images, "Test images");
  synth->add_option("--size", shapes.size, "Image side in pixels");
  synth->add_option("--seed", shapes.seed, "Generator seed");

  std::string data_root;
  std::string report_out;
  int min_pixels = 1;
  auto* ingest = app.add_subcommand("ingest", "Index a dataset and print its ingestion report");
  ingest->add_option("--data", data_root, "Dataset root")->required();
  ingest->add_option("--min-pixels", min_pixels, "Pixels a class needs to count as present");
  ingest->add_option("--out", report_out, "Write the report here instead of stdout");

  std::string train_config;
  std::string model_dir;
  std::string checkpoint;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune the multi-label classifier");
  train_cmd->add_option("--data", data_root, "Dataset root")->required();
  train_cmd->add_option("--config", train_config, "Training options JSON");
  train_cmd->add_option("--out", model_dir, "Model directory")->required();
  train_cmd->add_option("--backbone-checkpoint", checkpoint, "Pretrained backbone weights");

  std::string mode = "auto-eval";
  std::string input = "original";
  std::string masks = "multi";
  std::string split_name = "test";
  std::string backend_desc = "region-grow";
  std::string artifacts;
  int k = 3;
  double sigma = 10.0;
  double threshold = -1.0;
  int workers = 1;
  bool overwrite = false;
  bool no_cams = false;
  auto* run = app.add_subcommand("run", "Classify, prompt and segment a dataset split");
  run->add_option("--mode", mode, "auto-eval or review")->check(CLI::IsMember({"auto-eval", "review"}));
  run->add_option("--input", input, "original or smoothed")->check(CLI::IsMember({"original", "smoothed"}));
  run->add_option("--masks", masks, "single or multi")->check(CLI::IsMember({"single", "multi"}));
  run->add_option("-k", k, "Candidate masks per prompt");
  run->add_option("--sigma", sigma, "Gaussian sigma for smoothed input");
  run->add_option("--data", data_root, "Dataset root")->required();
  run->add_option("--split", split_name, "train or test");
  run->add_option("--model", model_dir, "Model directory")->required();
  run->add_option("--out", artifacts, "Artifacts root")->required();
  run->add_option("--backend", backend_desc, "region-grow[:tolerances] or http://host:port");
  run->add_option("--threshold", threshold, "Decision threshold (default: model config)");
  run->add_option("--workers", workers, "Parallel image workers");
  run->add_flag("--overwrite", overwrite, "Replace an existing run with the same id");
  run->add_flag("--no-cams", no_cams, "Skip CAM dumps");

  std::vector<std::string> run_dirs;
  std::size_t top_k = 10;
  auto* report = app.add_subcommand("report", "Combine auto-eval runs into one table");
  report->add_option("--run", run_dirs, "Run directories")->required();
  report->add_option("--top", top_k, "Class columns");
  report->add_option("--out", report_out, "Markdown output file");

  std::string host = "127.0.0.1";
  std::string ui_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve review runs over HTTP");
  serve->add_option("--root", artifacts, "Artifacts root")->required();
  serve->add_option("--port", port, "Port");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--ui", ui_dir, "Static review UI directory");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*synth) {
      make_shapes_dataset(synth_out, shapes);
      spdlog::info("wrote {} train / {} test images to {}", shapes.train_images, shapes.test_images, synth_out);
    } else if (*ingest) {
      LoadOptions options;
      options.min_pixel_count = min_pixels;
      std::vector<SplitIndex> splits;
      for (const Split s : {Split::kTrain, Split::kTest}) {
        if (fs::is_directory(fs::path(data_root) / "images" / to_string(s))) {
          splits.push_back(load_split(data_root, s, options));
        }
      }
      if (splits.empty()) throw IngestionError("no images/train or images/test under " + data_root);
      write_or_print(ingestion_report(splits).dump(2) + "\n", report_out);
    } else if (*train_cmd) {
      TrainOptions options = train_config.empty() ? TrainOptions{} : train_options_from_json(read_json_file(train_config));
      if (!checkpoint.empty()) options.backbone_checkpoint = checkpoint;
      options.out_dir = model_dir;
      const auto result = train(load_split(data_root, Split::kTrain), options);
      for (const auto& e : result.epochs) {
        spdlog::info("epoch {} loss {:.4f} lr {:.2e} precision {:.3f} recall {:.3f}", e.epoch, e.loss, e.lr,
                     e.precision, e.recall);
      }
    } else if (*run) {
      const auto artifact = load_model(model_dir);
      RunOptions options;
      options.mode = parse_run_mode(mode);
      options.segmenter.input_mode = parse_input_mode(input);
      options.segmenter.mask_strategy = parse_mask_strategy(masks);
      options.segmenter.k_proposals = k;
      options.segmenter.blur_sigma = sigma;
      options.decision_threshold = threshold > 0.0 ? threshold : artifact.config.decision_threshold;
      options.artifacts_root = artifacts;
      options.workers = workers;
      options.overwrite = overwrite;
      options.dump_cams = !no_cams;
      LoadOptions load;
      load.masks_required = options.mode == RunMode::kAutoEval;
      const auto split = load_split(data_root, parse_split(split_name), load);
      auto backend = make_segmenter(backend_desc);
      const auto out = run_batch(split, data_root, *artifact.model, *backend, options);
      std::cout << out.run_dir.string() << '\n';
      if (out.report) {
        const EvaluationReport one[] = {*out.report};
        std::cout << to_markdown(one);
      }
      if (out.manifest.flagged) return 3;
    } else if (*report) {
      std::vector<EvaluationReport> reports;
      for (const auto& dir : run_dirs) {
        if (read_manifest(dir).mode != RunMode::kAutoEval) {
          throw ConfigError(dir + " is a review run; only auto-eval runs carry a report");
        }
        reports.push_back(report_from_json(read_json_file(fs::path(dir) / "report.json")));
      }
      write_or_print(to_markdown(reports, top_k), report_out);
    } else if (*serve) {
      ReviewService service(artifacts);
      if (service.review_runs() == 0) throw ConfigError("no review runs under " + artifacts);
      if (!ui_dir.empty()) service.mount_static(ui_dir);
      g_service = &service;
      std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (g_service) g_service->stop();
      });
      spdlog::info("serving {} on http://{}:{}/api/v1", artifacts, host, port);
      if (!service.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
      g_service = nullptr;
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
