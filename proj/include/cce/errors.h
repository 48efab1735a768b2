/*
 * Copyright 2026 The CCE Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CCE_ERRORS_H_
#define CCE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace cce {

enum class ErrorKind {
  kInvalidInput,
  kIndex,
  kTrainingFailure,
  kEmptyBank,
  kNumericalFailure,
  kInvalidTarget,
  kDegenerateScenario,
};

// Single exception type for the library; `kind()` distinguishes the failure
// class so callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& message, int step)
      : Error(ErrorKind::kNumericalFailure, message), step_(step) {}

  // Optimizer step at which the non-finite value appeared (-1 if unknown).
  int step() const { return step_; }

 private:
  int step_;
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput:
      return "invalid-input";
    case ErrorKind::kIndex:
      return "index";
    case ErrorKind::kTrainingFailure:
      return "training-failure";
    case ErrorKind::kEmptyBank:
      return "empty-bank";
    case ErrorKind::kNumericalFailure:
      return "numerical-failure";
    case ErrorKind::kInvalidTarget:
      return "invalid-target";
    case ErrorKind::kDegenerateScenario:
      return "degenerate-scenario";
  }
  return "unknown";
}

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cce

#endif  // CCE_ERRORS_H_
