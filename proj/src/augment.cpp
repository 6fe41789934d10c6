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

#include "foodseg/augment.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "foodseg/errors.hpp"

namespace foodseg {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
}

void check_range(Range r, const char* name) {
  if (!(r.lo <= r.hi)) throw ConfigError(std::string(name) + " range is empty");
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

cv::Mat to_float_rgb(const cv::Mat& bgr) {
  require(bgr.type() == CV_8UC3, "expected a CV_8UC3 image");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  cv::Mat out;
  rgb.convertTo(out, CV_32FC3, 1.0 / 255.0);
  return out;
}

ImageTensor normalize(const cv::Mat& rgb) {
  ImageTensor t;
  t.channels = 3;
  t.height = rgb.rows;
  t.width = rgb.cols;
  t.data.resize(static_cast<std::size_t>(3) * rgb.rows * rgb.cols);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3f>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = (row[x][c] - kChannelMean[c]) / kChannelStd[c];
    }
  }
  return t;
}

cv::Mat luminance(const cv::Mat& rgb) {
  cv::Mat gray(rgb.size(), CV_32FC1);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* in = rgb.ptr<cv::Vec3f>(y);
    auto* out = gray.ptr<float>(y);
    for (int x = 0; x < rgb.cols; ++x) out[x] = 0.299f * in[x][0] + 0.587f * in[x][1] + 0.114f * in[x][2];
  }
  return gray;
}

void clip01(cv::Mat& m) {
  cv::min(m, 1.0, m);
  cv::max(m, 0.0, m);
}

}  // namespace

void AugmentationConfig::validate() const {
  if (crop_size <= 0) throw ConfigError("crop_size must be positive");
  check_range(crop_scale, "crop_scale");
  if (crop_scale.lo <= 0.0 || crop_scale.hi > 1.0) throw ConfigError("crop_scale must lie in (0, 1]");
  check_probability(hflip_p, "hflip_p");
  check_probability(vflip_p, "vflip_p");
  if (jitter.brightness < 0 || jitter.contrast < 0 || jitter.saturation < 0 || jitter.hue < 0 ||
      jitter.hue > 0.5) {
    throw ConfigError("color jitter amplitudes must be non-negative (hue <= 0.5)");
  }
  if (affine.max_rotation_deg < 0 || affine.max_translate < 0 || affine.max_translate > 1) {
    throw ConfigError("affine rotation/translation out of range");
  }
  check_range(affine.scale, "affine.scale");
  if (affine.scale.lo <= 0) throw ConfigError("affine.scale must be positive");
  if (blur.kernel <= 0 || blur.kernel % 2 == 0) throw ConfigError("blur.kernel must be odd and positive");
  check_range(blur.sigma, "blur.sigma");
  if (blur.sigma.lo <= 0) throw ConfigError("blur.sigma must be positive");
  check_probability(erase.p, "erase.p");
  check_range(erase.area, "erase.area");
  check_range(erase.aspect, "erase.aspect");
  if (erase.area.lo <= 0 || erase.area.hi >= 1 || erase.aspect.lo <= 0) {
    throw ConfigError("erase area must lie in (0, 1) and aspect must be positive");
  }
}

AugmentationConfig AugmentationConfig::identity(int crop_size) {
  AugmentationConfig cfg;
  cfg.crop_scale = {1.0, 1.0};
  cfg.crop_size = crop_size;
  cfg.hflip_p = 0.0;
  cfg.vflip_p = 0.0;
  cfg.jitter = {0.0, 0.0, 0.0, 0.0};
  cfg.affine = {0.0, 0.0, {1.0, 1.0}};
  cfg.blur.sigma = {0.001, 0.001};
  cfg.erase.p = 0.0;
  return cfg;
}

nlohmann::json to_json(const AugmentationConfig& cfg) {
  return {
      {"crop_scale", {cfg.crop_scale.lo, cfg.crop_scale.hi}},
      {"crop_size", cfg.crop_size},
      {"hflip_p", cfg.hflip_p},
      {"vflip_p", cfg.vflip_p},
      {"jitter",
       {{"brightness", cfg.jitter.brightness},
        {"contrast", cfg.jitter.contrast},
        {"saturation", cfg.jitter.saturation},
        {"hue", cfg.jitter.hue}}},
      {"affine",
       {{"max_rotation_deg", cfg.affine.max_rotation_deg},
        {"max_translate", cfg.affine.max_translate},
        {"scale", {cfg.affine.scale.lo, cfg.affine.scale.hi}}}},
      {"blur", {{"kernel", cfg.blur.kernel}, {"sigma", {cfg.blur.sigma.lo, cfg.blur.sigma.hi}}}},
      {"erase",
       {{"p", cfg.erase.p},
        {"area", {cfg.erase.area.lo, cfg.erase.area.hi}},
        {"aspect", {cfg.erase.aspect.lo, cfg.erase.aspect.hi}}}},
  };
}

AugmentationConfig augmentation_from_json(const nlohmann::json& j) {
  AugmentationConfig cfg;
  auto range = [](const nlohmann::json& node, Range fallback) {
    if (node.is_null()) return fallback;
    return Range{node.at(0).get<double>(), node.at(1).get<double>()};
  };
  try {
    cfg.crop_scale = range(j.value("crop_scale", nlohmann::json()), cfg.crop_scale);
    cfg.crop_size = j.value("crop_size", cfg.crop_size);
    cfg.hflip_p = j.value("hflip_p", cfg.hflip_p);
    cfg.vflip_p = j.value("vflip_p", cfg.vflip_p);
    if (j.contains("jitter")) {
      const auto& n = j["jitter"];
      cfg.jitter.brightness = n.value("brightness", cfg.jitter.brightness);
      cfg.jitter.contrast = n.value("contrast", cfg.jitter.contrast);
      cfg.jitter.saturation = n.value("saturation", cfg.jitter.saturation);
      cfg.jitter.hue = n.value("hue", cfg.jitter.hue);
    }
    if (j.contains("affine")) {
      const auto& n = j["affine"];
      cfg.affine.max_rotation_deg = n.value("max_rotation_deg", cfg.affine.max_rotation_deg);
      cfg.affine.max_translate = n.value("max_translate", cfg.affine.max_translate);
      cfg.affine.scale = range(n.value("scale", nlohmann::json()), cfg.affine.scale);
    }
    if (j.contains("blur")) {
      const auto& n = j["blur"];
      cfg.blur.kernel = n.value("kernel", cfg.blur.kernel);
      cfg.blur.sigma = range(n.value("sigma", nlohmann::json()), cfg.blur.sigma);
    }
    if (j.contains("erase")) {
      const auto& n = j["erase"];
      cfg.erase.p = n.value("p", cfg.erase.p);
      cfg.erase.area = range(n.value("area", nlohmann::json()), cfg.erase.area);
      cfg.erase.aspect = range(n.value("aspect", nlohmann::json()), cfg.erase.aspect);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("augmentation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ImageTensor to_tensor(const cv::Mat& bgr) { return normalize(to_float_rgb(bgr)); }

ImageTensor preprocess(const cv::Mat& bgr, int resolution) {
  require(resolution > 0, "preprocess: resolution must be positive");
  const cv::Mat rgb = to_float_rgb(bgr);
  cv::Mat resized;
  cv::resize(rgb, resized, cv::Size(resolution, resolution), 0, 0, cv::INTER_LINEAR);
  return normalize(resized);
}

namespace augment_ops {

cv::Mat random_resized_crop(const cv::Mat& rgb, Range scale, int size, std::mt19937_64& rng) {
  cv::Mat source = rgb;
  if (std::min(rgb.rows, rgb.cols) < size) {
    const double f = static_cast<double>(size) / std::min(rgb.rows, rgb.cols);
    const int w = std::max(size, static_cast<int>(std::lround(rgb.cols * f)));
    const int h = std::max(size, static_cast<int>(std::lround(rgb.rows * f)));
    spdlog::info("augment: {}x{} image is below crop size {}, resizing to {}x{} first", rgb.cols, rgb.rows,
                 size, w, h);
    cv::resize(rgb, source, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
  }
  const double area_fraction = uniform(rng, scale.lo, scale.hi);
  const double side = std::sqrt(area_fraction);
  const int cw = std::clamp(static_cast<int>(std::lround(source.cols * side)), 1, source.cols);
  const int ch = std::clamp(static_cast<int>(std::lround(source.rows * side)), 1, source.rows);
  const int x0 = cw == source.cols ? 0 : std::uniform_int_distribution<int>(0, source.cols - cw)(rng);
  const int y0 = ch == source.rows ? 0 : std::uniform_int_distribution<int>(0, source.rows - ch)(rng);
  cv::Mat out;
  cv::resize(source(cv::Rect(x0, y0, cw, ch)), out, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  return out;
}

cv::Mat hflip(const cv::Mat& rgb) {
  cv::Mat out;
  cv::flip(rgb, out, 1);
  return out;
}

cv::Mat vflip(const cv::Mat& rgb) {
  cv::Mat out;
  cv::flip(rgb, out, 0);
  return out;
}

cv::Mat color_jitter(const cv::Mat& rgb, const ColorJitter& jitter, std::mt19937_64& rng) {
  cv::Mat out = rgb.clone();
  if (jitter.brightness > 0) {
    out *= uniform(rng, std::max(0.0, 1.0 - jitter.brightness), 1.0 + jitter.brightness);
    clip01(out);
  }
  if (jitter.contrast > 0) {
    const double f = uniform(rng, std::max(0.0, 1.0 - jitter.contrast), 1.0 + jitter.contrast);
    const double m = cv::mean(luminance(out))[0];
    out = out * f + cv::Scalar::all((1.0 - f) * m);
    clip01(out);
  }
  if (jitter.saturation > 0) {
    const double f = uniform(rng, std::max(0.0, 1.0 - jitter.saturation), 1.0 + jitter.saturation);
    cv::Mat gray;
    cv::cvtColor(luminance(out), gray, cv::COLOR_GRAY2RGB);
    cv::addWeighted(out, f, gray, 1.0 - f, 0.0, out);
    clip01(out);
  }
  if (jitter.hue > 0) {
    const double shift = uniform(rng, -jitter.hue, jitter.hue) * 360.0;
    cv::Mat hsv;
    cv::cvtColor(out, hsv, cv::COLOR_RGB2HSV);
    for (int y = 0; y < hsv.rows; ++y) {
      auto* row = hsv.ptr<cv::Vec3f>(y);
      for (int x = 0; x < hsv.cols; ++x) {
        float h = row[x][0] + static_cast<float>(shift);
        h = std::fmod(h, 360.0f);
        if (h < 0) h += 360.0f;
        row[x][0] = h;
      }
    }
    cv::cvtColor(hsv, out, cv::COLOR_HSV2RGB);
    clip01(out);
  }
  return out;
}

cv::Mat random_affine(const cv::Mat& rgb, const AffineJitter& affine, std::mt19937_64& rng) {
  const double angle = uniform(rng, -affine.max_rotation_deg, affine.max_rotation_deg);
  const double tx = uniform(rng, -affine.max_translate, affine.max_translate) * rgb.cols;
  const double ty = uniform(rng, -affine.max_translate, affine.max_translate) * rgb.rows;
  const double scale = uniform(rng, affine.scale.lo, affine.scale.hi);
  if (angle == 0.0 && tx == 0.0 && ty == 0.0 && scale == 1.0) return rgb.clone();
  const cv::Point2f center(static_cast<float>(rgb.cols - 1) / 2.0f, static_cast<float>(rgb.rows - 1) / 2.0f);
  cv::Mat m = cv::getRotationMatrix2D(center, angle, scale);
  m.at<double>(0, 2) += tx;
  m.at<double>(1, 2) += ty;
  cv::Mat out;
  cv::warpAffine(rgb, out, m, rgb.size(), cv::INTER_LINEAR, cv::BORDER_CONSTANT, cv::Scalar::all(0));
  return out;
}

cv::Mat random_blur(const cv::Mat& rgb, const BlurJitter& blur, std::mt19937_64& rng) {
  const double sigma = uniform(rng, blur.sigma.lo, blur.sigma.hi);
  cv::Mat out;
  cv::GaussianBlur(rgb, out, cv::Size(blur.kernel, blur.kernel), sigma, sigma, cv::BORDER_REFLECT_101);
  return out;
}

void random_erase(ImageTensor& tensor, const RandomErase& erase, std::mt19937_64& rng) {
  if (!coin(rng, erase.p)) return;
  const double area = static_cast<double>(tensor.height) * tensor.width;
  const double log_lo = std::log(erase.aspect.lo);
  const double log_hi = std::log(erase.aspect.hi);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * uniform(rng, erase.area.lo, erase.area.hi);
    const double aspect = std::exp(uniform(rng, log_lo, log_hi));
    const int h = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int w = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (h < 1 || w < 1 || h >= tensor.height || w >= tensor.width) continue;
    const int y0 = std::uniform_int_distribution<int>(0, tensor.height - h)(rng);
    const int x0 = std::uniform_int_distribution<int>(0, tensor.width - w)(rng);
    for (int c = 0; c < tensor.channels; ++c) {
      for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) tensor.at(c, y, x) = 0.0f;
      }
    }
    return;
  }
}

}  // namespace augment_ops

ImageTensor augment(const LabeledImage& image, const AugmentationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  require(!image.pixels.empty(), "augment: empty image");
  std::mt19937_64 rng(seed);
  cv::Mat rgb = to_float_rgb(image.pixels);
  rgb = augment_ops::random_resized_crop(rgb, cfg.crop_scale, cfg.crop_size, rng);
  if (coin(rng, cfg.hflip_p)) rgb = augment_ops::hflip(rgb);
  if (coin(rng, cfg.vflip_p)) rgb = augment_ops::vflip(rgb);
  rgb = augment_ops::color_jitter(rgb, cfg.jitter, rng);
  rgb = augment_ops::random_affine(rgb, cfg.affine, rng);
  rgb = augment_ops::random_blur(rgb, cfg.blur, rng);
  ImageTensor tensor = normalize(rgb);
  augment_ops::random_erase(tensor, cfg.erase, rng);
  return tensor;
}

}  // namespace foodseg
