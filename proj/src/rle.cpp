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

#include "foodseg/rle.hpp"

#include "foodseg/errors.hpp"

namespace foodseg {

RunLengths rle_encode(const BinaryMask& mask) {
  RunLengths rle{mask.rows(), mask.cols(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t bit : mask.bits()) {
    if (bit != current) {
      rle.counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const RunLengths& rle) {
  require(rle.rows >= 0 && rle.cols >= 0, "rle_decode: negative size");
  const std::uint64_t total = static_cast<std::uint64_t>(rle.rows) * rle.cols;
  std::vector<std::uint8_t> bits;
  bits.reserve(total);
  std::uint8_t value = 0;
  for (std::uint32_t run : rle.counts) {
    if (bits.size() + run > total) throw ContractViolation("rle_decode: runs overflow mask size");
    bits.insert(bits.end(), run, value);
    value ^= 1;
  }
  if (bits.size() != total) throw ContractViolation("rle_decode: runs do not cover the mask");
  return BinaryMask(rle.rows, rle.cols, std::move(bits));
}

std::uint64_t rle_area(const RunLengths& rle) {
  std::uint64_t area = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
  return area;
}

nlohmann::json to_json(const RunLengths& rle) {
  return {{"size", {rle.rows, rle.cols}}, {"counts", rle.counts}};
}

RunLengths rle_from_json(const nlohmann::json& j) {
  RunLengths rle;
  try {
    const auto& size = j.at("size");
    if (!size.is_array() || size.size() != 2) throw ContractViolation("rle: size must be [rows, cols]");
    rle.rows = size[0].get<int>();
    rle.cols = size[1].get<int>();
    rle.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("rle: malformed json: ") + e.what());
  }
  return rle;
}

}  // namespace foodseg
