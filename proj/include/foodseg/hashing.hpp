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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace foodseg {

/// 64-bit FNV-1a; used for fingerprints and content addressing, not security.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes);
  Fnv1a& update(std::span<const std::uint8_t> bytes);
  Fnv1a& update(std::uint64_t value);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);

/// SplitMix64 finalizer; spreads structured inputs over the full seed space.
std::uint64_t mix64(std::uint64_t x);

/// Per-sample seed from (global seed, epoch, image id).
std::uint64_t derive_sample_seed(std::uint64_t global_seed, int epoch, std::string_view image_id);

}  // namespace foodseg
