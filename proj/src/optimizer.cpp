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

#include "foodseg/optimizer.hpp"

#include <cmath>

#include "foodseg/errors.hpp"

namespace foodseg {

AdamW::AdamW(std::vector<Parameter*> params, Options options) : params_(std::move(params)), options_(options) {
  for (const auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::step(std::span<const Matrix> grads, double lr) {
  require(grads.size() == params_.size(), "AdamW::step: gradient count mismatch");
  ++t_;
  const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const auto b1 = static_cast<float>(options_.beta1);
  const auto b2 = static_cast<float>(options_.beta2);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.decay && options_.weight_decay > 0) {
      p.value *= static_cast<float>(1.0 - lr * options_.weight_decay);
    }
    m_[i] = b1 * m_[i] + (1.0f - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0f - b2) * grads[i].cwiseProduct(grads[i]);
    const auto step_size = static_cast<float>(lr / bias1);
    const auto denom_scale = static_cast<float>(1.0 / std::sqrt(bias2));
    p.value.array() -=
        step_size * m_[i].array() / (v_[i].array().sqrt() * denom_scale + static_cast<float>(options_.eps));
  }
}

}  // namespace foodseg
