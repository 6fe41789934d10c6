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

// JSON API over run artifacts for the review UI. Every route lives under
// /api/v1:
//
//   GET  /runs                          run summaries
//   GET  /runs/{run}/queue              undecided items, most uncertain first
//   GET  /items/{image}/{class}?run=    prompt, masks (RLE + score), decision
//   GET  /runs/{run}/images/{image}     source image PNG
//   GET  /runs/{run}/cams/{image}/{class}  CAM PNG
//   POST /decisions                     {run_id, image_id, class_id, decision, mask_index, reviewer}
//   POST /runs/{run}/export             {out?, split?}
//
// Unknown runs or items answer 404; malformed decisions answer 422 with
// {"errors": [{"field", "message"}]}.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "foodseg/pipeline.hpp"
#include "foodseg/review.hpp"

namespace httplib {
class Server;
}

namespace foodseg {

class ReviewService {
 public:
  /// Indexes every run under {artifacts_root}/runs.
  explicit ReviewService(std::filesystem::path artifacts_root, Clock clock = system_clock());
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// Serves static files (e.g. a built review UI) at "/".
  void mount_static(const std::filesystem::path& dir);

  /// Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; call serve() afterwards.
  int bind_any(const std::string& host);
  bool serve();
  void stop();
  void wait_until_ready() const;

  std::vector<std::string> run_ids() const;
  std::size_t review_runs() const;

 private:
  std::shared_ptr<ReviewStore> store(const std::string& run_id) const;
  void rescan() const;
  void install_routes();

  std::filesystem::path root_;
  Clock clock_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<ReviewStore>> stores_;
};

}  // namespace foodseg
