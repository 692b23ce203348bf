// Copyright 2026 The pbe-synth Authors. All Rights Reserved.
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

#ifndef PBE_RANDOM_HPP_
#define PBE_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pbe {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Combines a base seed with task coordinates into an independent stream seed.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> parts) {
  uint64_t h = splitmix64(base);
  for (uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

// Uniform integer in [lo, hi]; portable across standard libraries.
inline long long uniform_int(Rng& rng, long long lo, long long hi) {
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + static_cast<long long>(x % span);
}

inline double uniform_real(Rng& rng) { return (rng() >> 11) * 0x1.0p-53; }

}  // namespace pbe

#endif  // PBE_RANDOM_HPP_
