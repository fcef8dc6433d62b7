// Copyright 2026 The gridtopo Authors
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

namespace gridtopo {

// Failure categories. The CLI maps each to a fixed process exit code.
enum class ErrorKind {
  invalid_input,  // malformed data or arguments
  disconnected,   // topology does not connect every bus
  assumption,     // modelling assumption violated (inertia, degree-one reference, ...)
  infeasible,     // no topology satisfies the design constraints
  numeric,        // numerical breakdown (LP, integration, factorization)
};

class GridError : public std::runtime_error {
 public:
  GridError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::disconnected: return "disconnected";
    case ErrorKind::assumption: return "assumption violated";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::numeric: return "numerical failure";
  }
  return "error";
}

}  // namespace gridtopo
