// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace odtq {

enum class ErrorCode {
  kIo = 1,          // file missing / unreadable / unwritable
  kParse = 2,       // malformed file content
  kValidation = 3,  // structurally valid input violating an invariant
  kConfig = 4,      // bad configuration value or unknown key
  kDependency = 5,  // missing upstream pipeline artifact
  kContract = 6,    // API precondition violated
  kNumeric = 7,     // NaN/Inf during training, divergence
  kInfeasible = 8,  // requested target cannot be attained
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace odtq
