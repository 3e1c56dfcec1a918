// Copyright 2026 The emfplan Authors.
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

namespace emfplan {

/// Base class for all library errors. `code()` is a short machine-readable
/// tag used by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& m) : Error("invalid_argument", m) {}
};

struct BoundsError : Error {
  explicit BoundsError(const std::string& m) : Error("out_of_bounds", m) {}
};

struct InfeasibleScene : Error {
  explicit InfeasibleScene(const std::string& m) : Error("infeasible_scene", m) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& m) : Error("shape_mismatch", m) {}
};

struct IllegalAction : Error {
  explicit IllegalAction(const std::string& m) : Error("illegal_action", m) {}
};

struct TrainingDiverged : Error {
  explicit TrainingDiverged(const std::string& m) : Error("training_diverged", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io_error", m) {}
};

/// Brute force asked to enumerate more candidates than its limit allows.
struct SearchTooLarge : Error {
  explicit SearchTooLarge(const std::string& m) : Error("search_too_large", m) {}
};

}  // namespace emfplan
