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

#include <fstream>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "foodseg/backends.hpp"
#include "foodseg/errors.hpp"
#include "foodseg/review.hpp"
#include "foodseg/rle.hpp"
#include "foodseg/service.hpp"
#include "support/tiny_world.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen parameter names.
#include <httplib.h>

namespace fs = std::filesystem;

namespace foodseg {
namespace {

using testing::TempDir;

constexpr int kSide = 16;
constexpr const char* kRunId = "run-handmade";

BinaryMask box(int x0, int y0, int x1, int y1) {
  BinaryMask m(kSide, kSide);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(y, x, true);
  }
  return m;
}

MaskProposalSet item(const std::string& image, int cls, std::vector<double> scores, std::vector<BinaryMask> masks) {
  MaskProposalSet s;
  s.image_id = image;
  s.class_id = cls;
  s.prompt = {cls, 4, 4, 0.9f};
  s.masks = std::move(masks);
  s.scores = std::move(scores);
  return s;
}

// A review run over three 16x16 images with five (image, class) items.
fs::path write_handmade_run(const fs::path& artifacts) {
  const fs::path dir = artifacts / "runs" / kRunId;
  fs::create_directories(dir / "images");
  ClassCatalog({{0, "background"}, {1, "rice"}, {2, "egg"}, {3, "bean"}}, 0).write(dir / "category.txt");

  const std::vector<MaskProposalSet> sets = {
      item("img_a", 1, {0.9, 0.6, 0.3}, {box(0, 0, 8, 8), box(0, 0, 4, 4), box(0, 0, 16, 16)}),
      item("img_a", 2, {0.5, 0.4, 0.2}, {box(4, 4, 12, 12), box(8, 8, 12, 12), box(0, 0, 2, 2)}),
      item("img_b", 1, {0.7, 0.6, 0.1}, {box(0, 0, 16, 8), box(0, 0, 8, 8), box(0, 0, 1, 1)}),
      item("img_b", 3, {0.8, 0.2, 0.1}, {box(0, 8, 16, 16), box(0, 12, 16, 16), box(0, 0, 1, 1)}),
      item("img_c", 2, {0.95, 0.5, 0.45}, {box(2, 2, 6, 6), box(2, 2, 4, 4), box(0, 0, 16, 16)}),
  };
  RunManifest m;
  m.run_id = kRunId;
  m.mode = RunMode::kProposeForReview;
  m.split = "test";
  m.backend = "handmade";
  m.started_at = m.finished_at = "2026-01-01T00:00:00Z";
  for (const std::string id : {"img_a", "img_b", "img_c"}) {
    cv::Mat img(kSide, kSide, CV_8UC3, cv::Scalar(id[4] * 2, 90, 30));
    write_png(dir / "images" / (id + ".png"), img);
    ImageStatus s;
    s.image_id = id;
    s.status = "done";
    for (const auto& set : sets) {
      if (set.image_id == id) {
        s.prompt_classes.push_back(set.class_id);
        ++s.proposal_sets;
      }
    }
    m.images.push_back(s);
  }
  std::ofstream(dir / "manifest.json") << to_json(m).dump(2);
  nlohmann::json array = nlohmann::json::array();
  for (const auto& s : sets) array.push_back(to_json(s));
  std::ofstream(dir / "proposals.json") << array.dump();
  return dir;
}

ReviewDecision accept(const std::string& image, int cls, int index) {
  return {image, cls, DecisionKind::kAccept, index, "tester", ""};
}

ReviewDecision reject(const std::string& image, int cls) {
  return {image, cls, DecisionKind::kRejectAll, -1, "tester", ""};
}

TEST(ParseDecision, CollectsEveryFieldError) {
  try {
    parse_decision({{"class_id", "x"}, {"decision", "accept"}});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    std::set<std::string> fields;
    for (const auto& f : e.errors()) fields.insert(f.field);
    EXPECT_EQ(fields, (std::set<std::string>{"image_id", "class_id", "reviewer", "mask_index"}));
  }
  EXPECT_THROW(parse_decision({{"image_id", "a"}, {"class_id", 1}, {"reviewer", "r"}, {"decision", "maybe"}}),
               ValidationError);
  EXPECT_THROW(parse_decision({{"image_id", "a"}, {"class_id", 1}, {"reviewer", "r"}, {"decision", "reject_all"},
                               {"mask_index", 0}}),
               ValidationError);
  EXPECT_THROW(parse_decision(nlohmann::json::array()), ValidationError);
  const auto ok = parse_decision(
      {{"image_id", "a"}, {"class_id", 1}, {"reviewer", "r"}, {"decision", "accept"}, {"mask_index", 2}});
  EXPECT_EQ(ok.kind, DecisionKind::kAccept);
  EXPECT_EQ(ok.mask_index, 2);
}

class ReviewStoreTest : public ::testing::Test {
 protected:
  TempDir artifacts_{"foodseg-review"};
  fs::path run_dir_ = write_handmade_run(artifacts_.path());
};

TEST_F(ReviewStoreTest, QueueIsAscendingByTopScore) {
  ReviewStore store(run_dir_);
  const auto q = store.queue();
  ASSERT_EQ(q.size(), 5u);
  std::vector<double> scores;
  for (const auto& i : q) scores.push_back(i.top_score);
  EXPECT_EQ(scores, (std::vector<double>{0.5, 0.7, 0.8, 0.9, 0.95}));
  EXPECT_EQ(q.front().image_id, "img_a");
  EXPECT_EQ(q.front().class_id, 2);
  EXPECT_EQ(q.front().n_masks, 3u);
}

TEST_F(ReviewStoreTest, RecordValidatesAndPersistsAppendOnly) {
  ReviewStore store(run_dir_, fixed_clock("2026-02-02T00:00:00Z"));
  EXPECT_THROW(store.record(accept("img_a", 1, 3)), ValidationError);
  EXPECT_THROW(store.record(accept("img_z", 1, 0)), NotFoundError);
  EXPECT_THROW(store.record(accept("img_a", 3, 0)), NotFoundError);
  const auto d = store.record(accept("img_a", 1, 2));
  EXPECT_EQ(d.decided_at, "2026-02-02T00:00:00Z");
  store.record(reject("img_a", 1));
  EXPECT_EQ(store.queue().size(), 4u);
  EXPECT_EQ(store.decided(), 1u);

  ReviewStore reloaded(run_dir_);
  ASSERT_EQ(reloaded.history("img_a", 1).size(), 2u);
  EXPECT_EQ(reloaded.current("img_a", 1)->kind, DecisionKind::kRejectAll);
  EXPECT_EQ(reloaded.history("img_a", 1).front().mask_index, 2);
  EXPECT_EQ(reloaded.queue().size(), 4u);
}

TEST_F(ReviewStoreTest, SkipsCorruptLogLines) {
  {
    std::ofstream log(run_dir_ / "decisions.jsonl");
    log << "{not json\n"
        << to_json(accept("img_b", 3, 1)).dump() << "\n";
  }
  ReviewStore store(run_dir_);
  EXPECT_EQ(store.decided(), 1u);
  EXPECT_EQ(store.current("img_b", 3)->mask_index, 1);
}

TEST_F(ReviewStoreTest, ExportPaintsHigherScoreOnTopAndReingests) {
  ReviewStore store(run_dir_);
  store.record(accept("img_a", 1, 0));  // 8x8 box at origin, score 0.9
  store.record(accept("img_a", 2, 0));  // 8x8 box at (4, 4), score 0.5
  store.record(reject("img_b", 1));
  store.record(accept("img_b", 3, 0));  // bottom half, score 0.8
  store.record(accept("img_c", 2, 2));  // full image, score 0.45
  const fs::path out = artifacts_.path() / "export";
  const auto summary = store.export_dataset(out, Split::kTrain);
  EXPECT_EQ(summary.images, 3u);
  EXPECT_EQ(summary.accepted, 4u);
  EXPECT_EQ(summary.rejected, 1u);
  EXPECT_EQ(summary.undecided, 0u);
  EXPECT_EQ(summary.occluded, 0u);

  const auto split = load_split(out, Split::kTrain);
  ASSERT_EQ(split.entries.size(), 3u);
  EXPECT_EQ(split.entries[0].label_vector, (LabelVector{1, 1, 1, 0}));
  EXPECT_EQ(split.entries[1].label_vector, (LabelVector{1, 0, 0, 1}));
  EXPECT_EQ(split.entries[2].label_vector, (LabelVector{0, 0, 1, 0}));

  const auto a = materialize(split.entries[0]);
  EXPECT_EQ(a.gt_mask->at<std::uint8_t>(5, 5), 1);    // overlap goes to the 0.9 mask
  EXPECT_EQ(a.gt_mask->at<std::uint8_t>(10, 10), 2);
  EXPECT_EQ(a.gt_mask->at<std::uint8_t>(15, 0), 0);
  EXPECT_EQ(cv::norm(a.pixels, read_color_image(run_dir_ / "images" / "img_a.png"), cv::NORM_INF), 0.0);
}

TEST_F(ReviewStoreTest, ExportCountsOccludedMasks) {
  ReviewStore store(run_dir_);
  store.record(accept("img_a", 1, 2));  // full image, score 0.3
  store.record(accept("img_a", 2, 1));  // inside it, score 0.4
  store.record(accept("img_c", 2, 0));
  const auto summary = store.export_dataset(artifacts_.path() / "export");
  EXPECT_EQ(summary.images, 2u);
  EXPECT_EQ(summary.undecided, 2u);
  EXPECT_EQ(summary.occluded, 0u);

  store.record(accept("img_a", 1, 0));  // score 0.9 over (0..8)^2
  store.record(accept("img_a", 2, 1));  // (8..12)^2, disjoint
  EXPECT_EQ(store.export_dataset(artifacts_.path() / "export").occluded, 0u);
  store.record(accept("img_a", 2, 2));  // (0..2)^2, under the 0.9 mask
  EXPECT_EQ(store.export_dataset(artifacts_.path() / "export").occluded, 1u);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_handmade_run(artifacts_.path());
    service_ = std::make_unique<ReviewService>(artifacts_.path(), fixed_clock("2026-03-03T00:00:00Z"));
    port_ = service_->bind_any("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { service_->serve(); });
    service_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    service_->stop();
    thread_.join();
  }

  std::pair<int, nlohmann::json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, nullptr};
    return {res->status, nlohmann::json::parse(res->body, nullptr, false)};
  }
  std::pair<int, nlohmann::json> post(const std::string& path, const std::string& body) {
    auto res = client_->Post(path, body, "application/json");
    if (!res) return {0, nullptr};
    return {res->status, nlohmann::json::parse(res->body, nullptr, false)};
  }
  static std::string decision(const std::string& run, int index) {
    return nlohmann::json{{"run_id", run},    {"image_id", "img_a"},  {"class_id", 1},
                          {"decision", "accept"}, {"mask_index", index}, {"reviewer", "tester"}}
        .dump();
  }

  TempDir artifacts_{"foodseg-service"};
  std::unique_ptr<ReviewService> service_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(ServiceTest, ListsRunsAndQueue) {
  EXPECT_EQ(service_->review_runs(), 1u);
  const auto [status, runs] = get("/api/v1/runs");
  EXPECT_EQ(status, 200);
  ASSERT_EQ(runs["runs"].size(), 1u);
  EXPECT_EQ(runs["runs"][0]["run_id"], kRunId);
  EXPECT_EQ(runs["runs"][0]["mode"], "review");
  EXPECT_EQ(runs["runs"][0]["items"], 5);

  const auto [qs, queue] = get(std::string("/api/v1/runs/") + kRunId + "/queue");
  EXPECT_EQ(qs, 200);
  ASSERT_EQ(queue["items"].size(), 5u);
  EXPECT_EQ(queue["items"][0]["top_score"], 0.5);
  EXPECT_EQ(queue["items"][0]["class_name"], "egg");
  EXPECT_EQ(get("/api/v1/runs/run-nope/queue").first, 404);
}

TEST_F(ServiceTest, ItemCarriesDecodableMasks) {
  const auto [status, item] = get(std::string("/api/v1/items/img_a/1?run=") + kRunId);
  ASSERT_EQ(status, 200);
  EXPECT_EQ(item["class_name"], "rice");
  EXPECT_EQ(item["prompt"]["x"], 4);
  ASSERT_EQ(item["masks"].size(), 3u);
  for (const auto& m : item["masks"]) {
    const auto mask = rle_decode(rle_from_json(m["rle"]));
    EXPECT_EQ(mask.count(), m["pixel_count"].get<std::size_t>());
  }
  EXPECT_EQ(item["masks"][0]["pixel_count"], 64);
  EXPECT_TRUE(item["decision"].is_null());
  EXPECT_EQ(get("/api/v1/items/img_a/1").first, 200);
  EXPECT_EQ(get("/api/v1/items/img_a/3").first, 404);
  EXPECT_EQ(get("/api/v1/items/img_a/1?run=run-nope").first, 404);
  EXPECT_EQ(get("/api/v1/items/img_a/one").first, 422);
}

TEST_F(ServiceTest, ServesImagesListedInTheManifestOnly) {
  auto res = client_->Get(std::string("/api/v1/runs/") + kRunId + "/images/img_b");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(get(std::string("/api/v1/runs/") + kRunId + "/images/img_q").first, 404);
  EXPECT_EQ(get(std::string("/api/v1/runs/") + kRunId + "/images/..%2Fmanifest").first, 404);
  EXPECT_EQ(get(std::string("/api/v1/runs/") + kRunId + "/cams/img_a/1").first, 404);
}

TEST_F(ServiceTest, AcceptsValidDecisionAndRejectsBadIndex) {
  const auto [ok, body] = post("/api/v1/decisions", decision(kRunId, 2));
  EXPECT_EQ(ok, 200);
  EXPECT_EQ(body["mask_index"], 2);
  EXPECT_EQ(body["decided_at"], "2026-03-03T00:00:00Z");
  EXPECT_EQ(body["queue_length"], 4);

  const auto [bad, errors] = post("/api/v1/decisions", decision(kRunId, 5));
  EXPECT_EQ(bad, 422);
  ASSERT_EQ(errors["errors"].size(), 1u);
  EXPECT_EQ(errors["errors"][0]["field"], "mask_index");

  const auto [item_status, item] = get(std::string("/api/v1/items/img_a/1?run=") + kRunId);
  EXPECT_EQ(item["decision"]["mask_index"], 2);
  EXPECT_EQ(item["history"].size(), 1u);
}

TEST_F(ServiceTest, DecisionErrors) {
  EXPECT_EQ(post("/api/v1/decisions", decision("run-nope", 0)).first, 404);
  const auto [status, errors] = post("/api/v1/decisions", R"({"decision": "accept"})");
  EXPECT_EQ(status, 422);
  std::set<std::string> fields;
  for (const auto& e : errors["errors"]) fields.insert(e["field"].get<std::string>());
  EXPECT_EQ(fields, (std::set<std::string>{"run_id", "image_id", "class_id", "reviewer", "mask_index"}));
  EXPECT_EQ(post("/api/v1/decisions", "{oops").first, 422);
  auto unknown_item = nlohmann::json::parse(decision(kRunId, 0));
  unknown_item["image_id"] = "img_z";
  EXPECT_EQ(post("/api/v1/decisions", unknown_item.dump()).first, 404);
}

TEST_F(ServiceTest, ExportEndpointWritesReingestableDataset) {
  ASSERT_EQ(post("/api/v1/decisions", decision(kRunId, 0)).first, 200);
  const auto [status, summary] = post(std::string("/api/v1/runs/") + kRunId + "/export", R"({"out": "exported"})");
  ASSERT_EQ(status, 200);
  EXPECT_EQ(summary["images"], 1);
  EXPECT_EQ(summary["accepted"], 1);
  EXPECT_EQ(summary["undecided"], 4);
  const auto split = load_split(artifacts_.path() / "exported", Split::kTrain);
  ASSERT_EQ(split.entries.size(), 1u);
  EXPECT_EQ(split.entries[0].label_vector, (LabelVector{1, 1, 0, 0}));
  EXPECT_EQ(post(std::string("/api/v1/runs/") + kRunId + "/export", R"({"split": "val"})").first, 422);
  EXPECT_EQ(post("/api/v1/runs/run-nope/export", "").first, 404);
}

TEST(ReviewEndToEnd, ProposalsFromARealRunExportAndReingest) {
  auto world = testing::make_shapes_world(200, 10, 5, 2);
  TempDir artifacts("foodseg-e2e");
  RunOptions options;
  options.mode = RunMode::kProposeForReview;
  options.artifacts_root = artifacts.path();
  RegionGrowSegmenter backend;
  const auto run = run_batch(world.test, world.root, *world.model, backend, options);
  ASSERT_FALSE(run.proposals.empty());

  ReviewStore store(run.run_dir);
  std::map<std::string, std::set<int>> accepted;
  for (const auto& q : store.queue()) {
    store.record(accept(q.image_id, q.class_id, 0));
    accepted[q.image_id].insert(q.class_id);
  }
  const auto summary = store.export_dataset(artifacts.path() / "export");
  const auto split = load_split(artifacts.path() / "export", Split::kTrain);
  ASSERT_EQ(split.entries.size(), accepted.size());
  std::size_t missing = 0;
  for (const auto& entry : split.entries) {
    const std::set<int>& expected = accepted.at(entry.image_id);
    std::size_t found = 0;
    for (int c : positive_classes(entry.label_vector)) {
      if (c == split.catalog.background_id()) continue;
      EXPECT_TRUE(expected.count(c)) << entry.image_id << " class " << c;
      ++found;
    }
    missing += expected.size() - found;
  }
  EXPECT_EQ(missing, summary.occluded);
  EXPECT_EQ(summary.accepted, run.proposals.size());
}

}  // namespace
}  // namespace foodseg
