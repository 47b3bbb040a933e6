// Copyright 2026 The ZegSeg Authors
// SPDX-License-Identifier: Apache-2.0
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

#ifndef ZEGSEG_ERROR_H_
#define ZEGSEG_ERROR_H_

#include <stdexcept>
#include <string>

namespace zegseg {

// Error categories. The numeric values double as CLI exit codes where one
// applies (2 = I/O or parse, 3 = configuration/contract, 4 = numeric).
enum class ErrorCode : int {
  kOk = 0,
  kIo = 2,
  kParse = 20,
  kConfig = 3,
  kInvariant = 30,
  kDimension = 31,
  kDegenerateEmbedding = 32,
  kInfeasibleMatching = 33,
  kEmptySegment = 34,
  kGeneration = 35,
  kProvider = 36,
  kNumeric = 4,
};

// Exit code for a given error category.
int ExitCodeFor(ErrorCode code);

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

#define ZS_CHECK(cond, code, msg)                  \
  do {                                             \
    if (!(cond)) ::zegseg::Fail((code), (msg));    \
  } while (0)

}  // namespace zegseg

#endif  // ZEGSEG_ERROR_H_
