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

#include "zegseg/error.h"

namespace zegseg {

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk:
      return 0;
    case ErrorCode::kIo:
    case ErrorCode::kParse:
      return 2;
    case ErrorCode::kNumeric:
      return 4;
    default:
      return 3;
  }
}

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kInvariant: return "invariant-violation";
    case ErrorCode::kDimension: return "dimension-mismatch";
    case ErrorCode::kDegenerateEmbedding: return "degenerate-embedding";
    case ErrorCode::kInfeasibleMatching: return "infeasible-matching";
    case ErrorCode::kEmptySegment: return "empty-segment";
    case ErrorCode::kGeneration: return "generation";
    case ErrorCode::kProvider: return "provider";
    case ErrorCode::kNumeric: return "numeric-overflow";
  }
  return "unknown";
}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace zegseg
