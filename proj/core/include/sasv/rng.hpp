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

#ifndef SASV_RNG_HPP_
#define SASV_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace sasv {

/// Seedable, splittable 64-bit generator.
///
/// The core is SplitMix64 (Steele, Lea & Flood, 2014): the state advances by
/// the golden-ratio increment 0x9E3779B97F4A7C15 and each output is the
/// state passed through the variant-13 finalizer
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z =  z ^ (z >> 31).
/// Derived quantities are defined on top of next_u64() so that any
/// implementation following these rules reproduces the same streams:
///   uniform()   = (next_u64() >> 11) * 2^-53
///   below(n)    = rejection sampling on next_u64() with bound
///                 2^64 - (2^64 mod n), then value mod n
///   normal()    = Box-Muller cosine branch on two fresh uniforms
///                 (u1 mapped to (0,1] as 1 - uniform()), no caching
///   split(id)   = generator seeded with mix(state ^ mix(id + golden))
///   shuffle     = Fisher-Yates from the back using below(i + 1).
/// The generator identity is tied to the "sasvkit-v1" file-format version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  std::uint64_t below(std::uint64_t n);
  double normal();

  // Independent stream keyed by id; does not advance this generator.
  Rng split(std::uint64_t stream_id) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const { return state_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t state_;
};

}  // namespace sasv

#endif  // SASV_RNG_HPP_
