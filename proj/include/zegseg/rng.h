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

#ifndef ZEGSEG_RNG_H_
#define ZEGSEG_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace zegseg {

// Engine seeded from a run seed plus stream identifiers, so independent
// consumers (init, scene k, text noise for class c, ...) never share draws.
inline std::mt19937_64 MakeRng(uint64_t seed,
                               std::initializer_list<uint64_t> stream = {}) {
  std::vector<uint32_t> words;
  words.push_back(static_cast<uint32_t>(seed));
  words.push_back(static_cast<uint32_t>(seed >> 32));
  for (uint64_t s : stream) {
    words.push_back(static_cast<uint32_t>(s));
    words.push_back(static_cast<uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

// FNV-1a, used to turn strings into stream identifiers.
inline uint64_t HashString(std::string_view text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace zegseg

#endif  // ZEGSEG_RNG_H_
