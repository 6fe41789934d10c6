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

#pragma once

#include <span>
#include <vector>

#include "foodseg/backbone.hpp"

namespace foodseg {

/// Adam with decoupled weight decay. Decay is skipped for parameters whose
/// `decay` flag is off.
class AdamW {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
  };

  AdamW(std::vector<Parameter*> params, Options options);

  void step(std::span<const Matrix> grads, double lr);
  long steps_taken() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  Options options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace foodseg
