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

#include "foodseg/cam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "foodseg/augment.hpp"
#include "foodseg/errors.hpp"

namespace fs = std::filesystem;

namespace foodseg {

void require_cam_support(const MultiLabelClassifier& model) {
  if (!model.backbone().provides_hook_gradients()) {
    throw CapabilityError("backbone '" + model.backbone().spec().value("architecture", std::string("?")) +
                          "' does not expose gradients at its final normalization layer");
  }
}

std::pair<int, int> infer_token_grid(int token_count, double aspect) {
  require(token_count > 0, "infer_token_grid: no tokens");
  require(aspect > 0, "infer_token_grid: aspect must be positive");
  // Among the factorizations rows*cols == token_count pick the one whose
  // cols/rows is closest to the image aspect.
  std::pair<int, int> best{token_count, 1};
  double best_err = std::abs(std::log(1.0 / token_count) - std::log(aspect));
  for (int rows = 1; rows <= token_count; ++rows) {
    if (token_count % rows != 0) continue;
    const int cols = token_count / rows;
    const double err = std::abs(std::log(static_cast<double>(cols) / rows) - std::log(aspect));
    if (err < best_err) {
      best = {rows, cols};
      best_err = err;
    }
  }
  return best;
}

cv::Mat upsample_bilinear(const cv::Mat& grid, int rows, int cols) {
  require(grid.type() == CV_32FC1 && !grid.empty(), "upsample_bilinear: expected a non-empty CV_32FC1 grid");
  require(rows > 0 && cols > 0, "upsample_bilinear: output size must be positive");
  const double sy = static_cast<double>(grid.rows) / rows;
  const double sx = static_cast<double>(grid.cols) / cols;
  std::vector<int> x0(static_cast<std::size_t>(cols)), x1(static_cast<std::size_t>(cols));
  std::vector<float> wx(static_cast<std::size_t>(cols));
  for (int x = 0; x < cols; ++x) {
    const double src = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(grid.cols - 1));
    const int lo = static_cast<int>(std::floor(src));
    x0[x] = lo;
    x1[x] = std::min(lo + 1, grid.cols - 1);
    wx[x] = static_cast<float>(src - lo);
  }
  cv::Mat out(rows, cols, CV_32FC1);
  for (int y = 0; y < rows; ++y) {
    const double src = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(grid.rows - 1));
    const int y0 = static_cast<int>(std::floor(src));
    const int y1 = std::min(y0 + 1, grid.rows - 1);
    const auto wy = static_cast<float>(src - y0);
    const auto* r0 = grid.ptr<float>(y0);
    const auto* r1 = grid.ptr<float>(y1);
    auto* o = out.ptr<float>(y);
    for (int x = 0; x < cols; ++x) {
      const float top = r0[x0[x]] + (r0[x1[x]] - r0[x0[x]]) * wx[x];
      const float bottom = r1[x0[x]] + (r1[x1[x]] - r1[x0[x]]) * wx[x];
      o[x] = top + (bottom - top) * wy;
    }
  }
  return out;
}

std::vector<ClassActivationMap> compute_cams(const cv::Mat& image, const MultiLabelClassifier& model,
                                             std::span<const int> class_ids) {
  require_cam_support(model);
  if (image.empty()) throw DecodeError("compute_cam: empty image");
  const auto fwd = model.forward(preprocess(image, model.input_resolution()));
  const TokenGrid& hook = fwd.tokens();
  auto [grid_rows, grid_cols] = std::pair{hook.rows, hook.cols};
  if (grid_rows * grid_cols != hook.tokens.rows()) {
    std::tie(grid_rows, grid_cols) = infer_token_grid(static_cast<int>(hook.tokens.rows()),
                                                      static_cast<double>(image.cols) / image.rows);
  }

  std::vector<ClassActivationMap> maps;
  maps.reserve(class_ids.size());
  for (int class_id : class_ids) {
    require(class_id >= 0 && class_id < model.num_classes(), "compute_cam: class id out of range");
    const Matrix grad = model.hook_gradient(fwd, class_id);
    const RowVector weights = grad.colwise().mean();
    const Eigen::VectorXf activation = (hook.tokens * weights.transpose()).cwiseMax(0.0f);

    cv::Mat token_map(grid_rows, grid_cols, CV_32FC1);
    for (int r = 0; r < grid_rows; ++r) {
      for (int c = 0; c < grid_cols; ++c) token_map.at<float>(r, c) = activation(r * grid_cols + c);
    }

    ClassActivationMap cam;
    cam.class_id = class_id;
    cam.raw_peak = activation.size() ? activation.maxCoeff() : 0.0f;
    cam.grid = upsample_bilinear(token_map, image.rows, image.cols);
    double peak = 0.0;
    cv::minMaxLoc(cam.grid, nullptr, &peak);
    if (peak > 0.0) {
      const auto peakf = static_cast<float>(peak);
      cam.grid.forEach<float>([peakf](float& v, const int*) { v = std::min(v / peakf, 1.0f); });
    } else {
      cam.grid.setTo(0.0f);
    }
    maps.push_back(std::move(cam));
  }
  return maps;
}

ClassActivationMap compute_cam(const cv::Mat& image, const MultiLabelClassifier& model, int class_id) {
  const int ids[] = {class_id};
  return std::move(compute_cams(image, model, ids).front());
}

std::optional<PointPrompt> select_prompt(const ClassActivationMap& cam) {
  require(cam.grid.type() == CV_32FC1, "select_prompt: grid must be CV_32FC1");
  float best = 0.0f;
  int bx = -1, by = -1;
  for (int y = 0; y < cam.grid.rows; ++y) {
    const auto* row = cam.grid.ptr<float>(y);
    for (int x = 0; x < cam.grid.cols; ++x) {
      if (row[x] > best) {
        best = row[x];
        bx = x;
        by = y;
      }
    }
  }
  if (bx < 0) return std::nullopt;
  return PointPrompt{cam.class_id, bx, by, best};
}

std::string cam_file_stem(const std::string& image_id, int class_id) {
  return image_id + "." + std::to_string(class_id) + ".cam";
}

void write_cam_dump(const fs::path& dir, const std::string& image_id, const ClassActivationMap& cam,
                    const std::optional<PointPrompt>& prompt) {
  fs::create_directories(dir);
  cv::Mat gray;
  cam.grid.convertTo(gray, CV_8UC1, 255.0);
  const std::string stem = cam_file_stem(image_id, cam.class_id);
  write_png(dir / (stem + ".png"), gray);
  nlohmann::json sidecar = {{"image_id", image_id},
                            {"class_id", cam.class_id},
                            {"raw_peak", cam.raw_peak},
                            {"width", cam.grid.cols},
                            {"height", cam.grid.rows}};
  if (prompt) {
    sidecar["prompt"] = {{"x", prompt->x}, {"y", prompt->y}, {"activation", prompt->activation}};
  } else {
    sidecar["prompt"] = nullptr;
  }
  std::ofstream out(dir / (stem + ".json"));
  out << sidecar.dump(2) << '\n';
}

}  // namespace foodseg
