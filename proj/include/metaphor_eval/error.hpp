// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metaphor_eval {

// Base for every error raised by the library. Callers that only want to
// report and exit can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violated a format or invariant. `line` is 1-based, 0 when the
// problem is not tied to a single line.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace metaphor_eval
