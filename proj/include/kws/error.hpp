// kws/error.hpp

// Copyright 2026  kws-e2e authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace kws {

// Bad inputs, bad shapes, bad configs. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unsupported on-disk data (magic/version mismatch, truncation).
class FormatError : public ValidationError {
 public:
  explicit FormatError(const std::string& msg) : ValidationError(msg) {}
};

// A training window too short to admit any legal path through the keyword
// chain. The trainer counts and skips these instead of aborting.
class InfeasibleWindowError : public ValidationError {
 public:
  explicit InfeasibleWindowError(const std::string& msg)
      : ValidationError(msg) {}
};

#define KWS_CHECK(cond, msg)                  \
  do {                                        \
    if (!(cond)) throw ::kws::ValidationError(msg); \
  } while (0)

}  // namespace kws
