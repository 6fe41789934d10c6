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

#include <stdexcept>
#include <string>
#include <string_view>

namespace foodseg {

/// A caller broke a documented precondition (shape mismatch, out-of-domain value).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dataset content could not be ingested (unknown class id, missing mask, ...).
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration object failed validation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model or backend lacks something the caller needs (e.g. hook gradients).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Image bytes could not be decoded.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-(image, class) reasons a prompt produced no evaluable mask.
enum class SkipReason { kNoActivation, kEmptyProposal };

inline std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::kNoActivation:
      return "NoActivation";
    case SkipReason::kEmptyProposal:
      return "EmptyProposal";
  }
  return "unknown";
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace foodseg
