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

#include "foodseg/hashing.hpp"

#include <array>

namespace foodseg {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

Fnv1a& Fnv1a::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a& Fnv1a::update(std::span<const std::uint8_t> bytes) {
  for (std::uint8_t c : bytes) {
    state_ ^= c;
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a& Fnv1a::update(std::uint64_t value) {
  std::array<std::uint8_t, 8> le{};
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return update(std::span<const std::uint8_t>(le));
}

std::string Fnv1a::hex() const { return to_hex(state_); }

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_sample_seed(std::uint64_t global_seed, int epoch, std::string_view image_id) {
  Fnv1a h;
  h.update(global_seed).update(static_cast<std::uint64_t>(epoch)).update(image_id);
  return mix64(h.digest());
}

}  // namespace foodseg
