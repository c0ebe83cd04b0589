/*
 * Copyright 2026 The TAN Authors.
 *
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

#ifndef TAN_RANDOM_H_
#define TAN_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tanet {

// Counter-based 64-bit generator: draw i of stream (seed, stream_id) is
// SplitMix64(key + i * golden), so any draw can be reproduced from its
// position alone and independent streams never share state. Only integer
// arithmetic is involved, which makes sequences identical on every platform.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream_id)
      : key_(Mix(seed ^ Mix(stream_id + 0x632be59bd9b4e019ULL))) {}

  uint64_t NextU64() { return Mix(key_ + (counter_++) * kGolden); }

  // Uniform in [0, 1) with 53 random bits.
  double NextUniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi], inclusive.
  int64_t NextInt(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(NextU64() % span);
  }

  // Standard normal via Box-Muller; consumes two draws.
  double NextNormal() {
    const double u1 = 1.0 - NextUniform();
    const double u2 = NextUniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  uint64_t counter() const { return counter_; }

 private:
  static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static uint64_t Mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace tanet

#endif  // TAN_RANDOM_H_
