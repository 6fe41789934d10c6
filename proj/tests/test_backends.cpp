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

#include <thread>

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>

#include "foodseg/backends.hpp"
#include "foodseg/errors.hpp"
#include "foodseg/raster.hpp"
#include "foodseg/rle.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen parameter names.
#include <httplib.h>

namespace foodseg {
namespace {

// Two flat regions: left half value 10, right half value 200, one noisy pixel.
cv::Mat two_halves() {
  cv::Mat img(6, 8, CV_8UC3, cv::Scalar(10, 10, 10));
  img(cv::Rect(4, 0, 4, 6)).setTo(cv::Scalar(200, 200, 200));
  img.at<cv::Vec3b>(2, 1) = {30, 30, 30};
  return img;
}

TEST(ConnectedComponent, GrowsWithinTolerance) {
  const cv::Mat img = two_halves();
  const auto tight = connected_component(img, {0, 0}, 5);
  EXPECT_EQ(tight.count(), 23u);
  EXPECT_FALSE(tight.at(2, 1));
  const auto loose = connected_component(img, {0, 0}, 20);
  EXPECT_EQ(loose.count(), 24u);
  EXPECT_FALSE(loose.at(0, 4));
  EXPECT_EQ(connected_component(img, {0, 0}, 255).count(), 48u);
}

TEST(ConnectedComponent, UsesFourConnectivity) {
  cv::Mat img(3, 3, CV_8UC1, cv::Scalar(0));
  img.at<std::uint8_t>(0, 0) = 9;
  img.at<std::uint8_t>(1, 1) = 9;
  EXPECT_EQ(connected_component(img, {0, 0}, 0).count(), 1u);
}

TEST(ConnectedComponent, RejectsSeedOutsideImage) {
  EXPECT_THROW(connected_component(two_halves(), {8, 0}, 5), ContractViolation);
}

TEST(RegionGrow, OneCandidatePerToleranceWithDescendingScores) {
  RegionGrowSegmenter backend({5, 20, 255});
  const auto multi = backend.propose(two_halves(), {0, 0}, true, 3);
  ASSERT_EQ(multi.size(), 3u);
  EXPECT_EQ(multi[0].mask.count(), 23u);
  EXPECT_EQ(multi[1].mask.count(), 24u);
  EXPECT_EQ(multi[2].mask.count(), 48u);
  EXPECT_GT(multi[0].score, multi[1].score);
  EXPECT_GT(multi[1].score, multi[2].score);
  EXPECT_EQ(backend.propose(two_halves(), {0, 0}, true, 2).size(), 2u);
  EXPECT_EQ(backend.propose(two_halves(), {0, 0}, false, 3).size(), 1u);
}

TEST(RegionGrow, ParsesDescriptor) {
  auto backend = make_segmenter("region-grow:5,20");
  EXPECT_EQ(backend->name(), "region-grow");
  EXPECT_EQ(backend->propose(two_halves(), {0, 0}, true, 3).size(), 2u);
  EXPECT_THROW(make_segmenter("region-grow:5,x"), ConfigError);
  EXPECT_THROW(make_segmenter("magic"), ConfigError);
  EXPECT_THROW(RegionGrowSegmenter(std::vector<int>{}), ConfigError);
  EXPECT_EQ(make_segmenter("http://127.0.0.1:9")->name(), "http:http://127.0.0.1:9");
}

TEST(GroundTruthBackend, ReturnsRegionOfClassUnderPrompt) {
  const cv::Mat img = two_halves();
  cv::Mat labels(6, 8, CV_8UC1, cv::Scalar(0));
  labels(cv::Rect(4, 0, 4, 6)).setTo(3);
  labels.at<std::uint8_t>(0, 0) = 3;
  GroundTruthSegmenter backend;
  backend.add(img, labels);
  const auto out = backend.propose(img, {5, 5}, true, 3);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].mask, BinaryMask::from_label(labels, 3));
  EXPECT_EQ(out[0].mask.count(), 25u);
  EXPECT_THROW(backend.propose(cv::Mat(6, 8, CV_8UC3, cv::Scalar(1, 2, 3)), {0, 0}, true, 3), ContractViolation);
}

class MockSegmenterServer {
 public:
  MockSegmenterServer() {
    server_.Post("/propose", [this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_file("image") || !req.has_file("request")) {
        res.status = 400;
        return;
      }
      const auto& png = req.get_file_value("image").content;
      last_image = cv::imdecode(std::vector<std::uint8_t>(png.begin(), png.end()), cv::IMREAD_UNCHANGED);
      last_request = nlohmann::json::parse(req.get_file_value("request").content);
      if (status != 200) {
        res.status = status;
        return;
      }
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockSegmenterServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  int status = 200;
  std::string body;
  cv::Mat last_image;
  nlohmann::json last_request;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(HttpBackend, SendsImageAndPromptAndDecodesMasks) {
  MockSegmenterServer mock;
  BinaryMask a(6, 8);
  a.set(1, 2, true);
  BinaryMask b(6, 8);
  b.set(5, 7, true);
  b.set(0, 0, true);
  mock.body = nlohmann::json{{"masks",
                              {{{"rle", to_json(rle_encode(a))}, {"score", 0.75}},
                               {{"rle", to_json(rle_encode(b))}, {"score", 0.5}}}}}
                  .dump();
  HttpSegmenter backend(mock.url(), 5);
  const cv::Mat img = two_halves();
  const auto out = backend.propose(img, {3, 4}, true, 3);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].mask, a);
  EXPECT_EQ(out[1].mask, b);
  EXPECT_DOUBLE_EQ(out[0].score, 0.75);
  EXPECT_EQ(mock.last_request, (nlohmann::json{{"x", 3}, {"y", 4}, {"multimask", true}, {"k", 3}}));
  EXPECT_EQ(cv::norm(mock.last_image, img, cv::NORM_INF), 0.0);
}

TEST(HttpBackend, ReportsHttpAndPayloadErrors) {
  MockSegmenterServer mock;
  HttpSegmenter backend(mock.url(), 5);
  mock.status = 503;
  EXPECT_THROW(backend.propose(two_halves(), {0, 0}, true, 3), std::runtime_error);
  mock.status = 200;
  mock.body = R"({"masks": [{"score": 0.5}]})";
  EXPECT_THROW(backend.propose(two_halves(), {0, 0}, true, 3), std::runtime_error);
}

TEST(HttpBackend, ReportsUnreachableHost) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  HttpSegmenter backend("http://127.0.0.1:" + std::to_string(port), 2);
  EXPECT_THROW(backend.propose(two_halves(), {0, 0}, true, 3), std::runtime_error);
}

}  // namespace
}  // namespace foodseg
