// Copyright 2026 The sasvkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SASV_ERROR_HPP_
#define SASV_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sasv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition (bad batch composition,
// out-of-range label, shape mismatch, insufficient sampling pool, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// A value is outside the mathematical domain of an operation, e.g. a
// zero-norm vector handed to a cosine.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Training produced a NaN or infinity in a loss, gradient or parameter.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Positioned parse failure. line is 1-based; 0 means "not line oriented"
// (binary streams), in which case offset carries the byte position.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line,
             std::string token = {})
      : Error(format(message, line, token)),
        line_(line),
        token_(std::move(token)) {}

  std::size_t line() const { return line_; }
  const std::string& token() const { return token_; }

 private:
  static std::string format(const std::string& message, std::size_t line,
                            const std::string& token) {
    std::string out = line > 0 ? "line " + std::to_string(line) + ": " : "";
    out += message;
    if (!token.empty()) out += " ('" + token + "')";
    return out;
  }

  std::size_t line_;
  std::string token_;
};

}  // namespace sasv

#endif  // SASV_ERROR_HPP_
