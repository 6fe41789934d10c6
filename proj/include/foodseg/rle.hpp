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

// Run-length encoding of binary masks.
//
// Pixels are scanned row-major. `counts` alternates zero-runs and
// one-runs and always starts with a zero-run (which may be 0 when the
// first pixel is set). The JSON form is
//   {"size": [rows, cols], "counts": [n0, n1, n0, ...]}

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "foodseg/raster.hpp"

namespace foodseg {

struct RunLengths {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RunLengths&, const RunLengths&) = default;
};

RunLengths rle_encode(const BinaryMask& mask);
/// Throws ContractViolation when the runs do not cover rows*cols exactly.
BinaryMask rle_decode(const RunLengths& rle);

/// Foreground pixel count, read straight from the runs.
std::uint64_t rle_area(const RunLengths& rle);

nlohmann::json to_json(const RunLengths& rle);
RunLengths rle_from_json(const nlohmann::json& j);

}  // namespace foodseg
