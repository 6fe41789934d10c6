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

#include "foodseg/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "foodseg/cam.hpp"
#include "foodseg/rle.hpp"

namespace fs = std::filesystem;

namespace foodseg {

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

void send_field_errors(httplib::Response& res, const std::vector<FieldError>& errors) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
  send_json(res, 422, {{"errors", list}});
}

bool send_file(httplib::Response& res, const fs::path& path, const char* type) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  res.set_content(std::move(bytes), type);
  return true;
}

std::optional<int> parse_int(const std::string& text) {
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) return std::nullopt;
  return value;
}

bool has_image(const RunManifest& manifest, const std::string& image_id) {
  return std::any_of(manifest.images.begin(), manifest.images.end(),
                     [&](const ImageStatus& s) { return s.image_id == image_id; });
}

std::string image_url(const std::string& run_id, const std::string& image_id) {
  return "/api/v1/runs/" + run_id + "/images/" + image_id;
}

std::string cam_url(const std::string& run_id, const std::string& image_id, int class_id) {
  return "/api/v1/runs/" + run_id + "/cams/" + image_id + "/" + std::to_string(class_id);
}

nlohmann::json item_json(const ReviewStore& store, const MaskProposalSet& set) {
  const auto& m = store.manifest();
  nlohmann::json masks = nlohmann::json::array();
  for (std::size_t i = 0; i < set.masks.size(); ++i) {
    masks.push_back({{"index", i},
                     {"rle", to_json(rle_encode(set.masks[i]))},
                     {"score", set.scores[i]},
                     {"pixel_count", set.masks[i].count()}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& d : store.history(set.image_id, set.class_id)) history.push_back(to_json(d));
  const auto current = store.current(set.image_id, set.class_id);
  const bool has_cam = fs::exists(store.run_dir() / "cams" / (cam_file_stem(set.image_id, set.class_id) + ".png"));
  return {{"run_id", m.run_id},
          {"image_id", set.image_id},
          {"class_id", set.class_id},
          {"class_name", store.catalog().name(set.class_id)},
          {"image_url", image_url(m.run_id, set.image_id)},
          {"cam_url", has_cam ? nlohmann::json(cam_url(m.run_id, set.image_id, set.class_id)) : nlohmann::json()},
          {"prompt", {{"x", set.prompt.x}, {"y", set.prompt.y}, {"activation", set.prompt.activation}}},
          {"masks", masks},
          {"decision", current ? to_json(*current) : nlohmann::json()},
          {"history", history}};
}

}  // namespace

ReviewService::ReviewService(fs::path artifacts_root, Clock clock)
    : root_(std::move(artifacts_root)), clock_(std::move(clock)), server_(std::make_unique<httplib::Server>()) {
  rescan();
  install_routes();
}

ReviewService::~ReviewService() { stop(); }

void ReviewService::rescan() const {
  std::lock_guard lock(mutex_);
  const fs::path runs = root_ / "runs";
  if (!fs::is_directory(runs)) return;
  for (const auto& dir : fs::directory_iterator(runs)) {
    const std::string id = dir.path().filename().string();
    if (stores_.count(id) || !fs::exists(dir.path() / "manifest.json")) continue;
    try {
      stores_[id] = std::make_shared<ReviewStore>(dir.path(), clock_);
    } catch (const std::exception& e) {
      spdlog::warn("ignoring run {}: {}", id, e.what());
    }
  }
}

std::shared_ptr<ReviewStore> ReviewService::store(const std::string& run_id) const {
  rescan();
  std::lock_guard lock(mutex_);
  const auto it = stores_.find(run_id);
  return it == stores_.end() ? nullptr : it->second;
}

std::vector<std::string> ReviewService::run_ids() const {
  rescan();
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, store] : stores_) ids.push_back(id);
  return ids;
}

std::size_t ReviewService::review_runs() const {
  rescan();
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(stores_.begin(), stores_.end(), [](const auto& kv) {
    return kv.second->manifest().mode == RunMode::kProposeForReview;
  }));
}

void ReviewService::mount_static(const fs::path& dir) {
  if (!server_->set_mount_point("/", dir.string())) throw ConfigError("cannot serve static files from " + dir.string());
}

bool ReviewService::listen(const std::string& host, int port) { return server_->listen(host, port); }

int ReviewService::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool ReviewService::serve() { return server_->listen_after_bind(); }

void ReviewService::stop() {
  if (server_) server_->stop();
}

void ReviewService::wait_until_ready() const { server_->wait_until_ready(); }

void ReviewService::install_routes() {
  auto& srv = *server_;

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "unknown error");
    }
  });

  srv.Get("/api/v1/runs", [this](const httplib::Request&, httplib::Response& res) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& id : run_ids()) {
      const auto s = store(id);
      const auto& m = s->manifest();
      runs.push_back({{"run_id", m.run_id},
                      {"mode", to_string(m.mode)},
                      {"split", m.split},
                      {"segmenter", to_json(m.segmenter)},
                      {"backend", m.backend},
                      {"started_at", m.started_at},
                      {"finished_at", m.finished_at},
                      {"flagged", m.flagged},
                      {"images", m.images.size()},
                      {"items", s->proposals().size()},
                      {"decided", s->decided()}});
    }
    send_json(res, 200, {{"runs", runs}});
  });

  srv.Get("/api/v1/runs/:run/queue", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = store(req.path_params.at("run"));
    if (!s) return send_error(res, 404, "unknown run");
    nlohmann::json items = nlohmann::json::array();
    for (const auto& q : s->queue()) {
      items.push_back({{"image_id", q.image_id},
                       {"class_id", q.class_id},
                       {"class_name", s->catalog().name(q.class_id)},
                       {"top_score", q.top_score},
                       {"n_masks", q.n_masks}});
    }
    send_json(res, 200, {{"run_id", s->manifest().run_id}, {"items", items}});
  });

  srv.Get("/api/v1/items/:image/:class", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string image_id = req.path_params.at("image");
    const auto class_id = parse_int(req.path_params.at("class"));
    if (!class_id) return send_field_errors(res, {{"class", "must be an integer"}});

    std::shared_ptr<ReviewStore> chosen;
    if (req.has_param("run")) {
      chosen = store(req.get_param_value("run"));
      if (!chosen) return send_error(res, 404, "unknown run");
    } else {
      // Newest review run holding the item.
      for (const auto& id : run_ids()) {
        const auto s = store(id);
        if (s->manifest().mode != RunMode::kProposeForReview || !s->find(image_id, *class_id)) continue;
        if (!chosen || s->manifest().finished_at >= chosen->manifest().finished_at) chosen = s;
      }
    }
    const MaskProposalSet* set = chosen ? chosen->find(image_id, *class_id) : nullptr;
    if (!set) return send_error(res, 404, "unknown item");
    send_json(res, 200, item_json(*chosen, *set));
  });

  srv.Get("/api/v1/runs/:run/images/:image", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = store(req.path_params.at("run"));
    const std::string image_id = req.path_params.at("image");
    if (!s) return send_error(res, 404, "unknown run");
    if (!has_image(s->manifest(), image_id) || !send_file(res, s->run_dir() / "images" / (image_id + ".png"), "image/png")) {
      send_error(res, 404, "unknown image");
    }
  });

  srv.Get("/api/v1/runs/:run/cams/:image/:class", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = store(req.path_params.at("run"));
    const std::string image_id = req.path_params.at("image");
    const auto class_id = parse_int(req.path_params.at("class"));
    if (!s) return send_error(res, 404, "unknown run");
    if (!class_id || !has_image(s->manifest(), image_id) ||
        !send_file(res, s->run_dir() / "cams" / (cam_file_stem(image_id, *class_id) + ".png"), "image/png")) {
      send_error(res, 404, "unknown CAM");
    }
  });

  srv.Post("/api/v1/decisions", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    if (body.is_discarded()) return send_field_errors(res, {{"body", "malformed JSON"}});

    std::vector<FieldError> errors;
    std::string run_id;
    if (body.is_object() && body.contains("run_id") && body["run_id"].is_string()) {
      run_id = body["run_id"].get<std::string>();
    } else {
      errors.push_back({"run_id", "required string"});
    }
    ReviewDecision decision;
    try {
      decision = parse_decision(body);
    } catch (const ValidationError& e) {
      errors.insert(errors.end(), e.errors().begin(), e.errors().end());
    }
    if (!errors.empty()) return send_field_errors(res, errors);

    const auto s = store(run_id);
    if (!s) return send_error(res, 404, "unknown run");
    try {
      const auto stored = s->record(decision);
      auto out = to_json(stored);
      out["run_id"] = run_id;
      out["queue_length"] = s->queue().size();
      send_json(res, 200, out);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const ValidationError& e) {
      send_field_errors(res, e.errors());
    }
  });

  srv.Post("/api/v1/runs/:run/export", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = store(req.path_params.at("run"));
    if (!s) return send_error(res, 404, "unknown run");
    nlohmann::json body = nlohmann::json::object();
    if (!req.body.empty()) {
      body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return send_field_errors(res, {{"body", "expected a JSON object"}});
    }
    std::vector<FieldError> errors;
    fs::path out = s->run_dir() / "export";
    Split split = Split::kTrain;
    if (body.contains("out")) {
      if (!body["out"].is_string() || body["out"].get<std::string>().empty()) {
        errors.push_back({"out", "must be a non-empty string"});
      } else {
        out = fs::path(body["out"].get<std::string>());
        if (out.is_relative()) out = root_ / out;
      }
    }
    if (body.contains("split")) {
      try {
        split = parse_split(body["split"].get<std::string>());
      } catch (const std::exception&) {
        errors.push_back({"split", "must be train or test"});
      }
    }
    if (!errors.empty()) return send_field_errors(res, errors);
    send_json(res, 200, to_json(s->export_dataset(out, split)));
  });
}

}  // namespace foodseg
