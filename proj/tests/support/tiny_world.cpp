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

#include "support/tiny_world.hpp"

#include <atomic>
#include <random>

#include <unistd.h>

#include "foodseg/synthetic.hpp"

namespace fs = std::filesystem;

namespace foodseg::testing {

TempDir::TempDir(const std::string& prefix) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::unique_ptr<MultiLabelClassifier> small_model(int resolution, int patch, int dim, int hidden, int num_classes,
                                                  std::uint64_t seed) {
  PatchMlpSpec spec;
  spec.input_resolution = resolution;
  spec.patch = patch;
  spec.dim = dim;
  spec.hidden = hidden;
  return std::make_unique<MultiLabelClassifier>(std::make_unique<PatchMlpBackbone>(spec, seed), num_classes, 0,
                                                seed + 1);
}

ImageTensor random_tensor(int channels, int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  ImageTensor t{channels, height, width, std::vector<float>(static_cast<std::size_t>(channels) * height * width)};
  for (auto& v : t.data) v = dist(rng);
  return t;
}

TrainOptions shapes_train_options(std::uint64_t seed) {
  TrainOptions options;
  options.classifier.input_resolution = 128;
  options.classifier.epochs = 5;
  options.classifier.warmup_epochs = 1;
  options.classifier.base_lr = 3e-3;
  options.classifier.batch_size = 8;
  options.augmentation.crop_size = 128;
  PatchMlpSpec spec;
  spec.input_resolution = 128;
  spec.patch = 8;
  spec.dim = 32;
  spec.hidden = 64;
  options.backbone = spec.to_json();
  options.seed = seed;
  return options;
}

ShapesWorld make_shapes_world(int train_images, int test_images, std::uint64_t data_seed, std::uint64_t train_seed) {
  ShapesWorld world;
  world.dir = std::make_unique<TempDir>("foodseg-shapes");
  world.root = world.dir->path() / "data";
  make_shapes_dataset(world.root, {train_images, test_images, 128, data_seed});
  world.train = load_split(world.root, Split::kTrain);
  world.test = load_split(world.root, Split::kTest);
  world.model = train(world.train, shapes_train_options(train_seed)).model;
  return world;
}

}  // namespace foodseg::testing
