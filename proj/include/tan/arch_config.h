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

#ifndef TAN_ARCH_CONFIG_H_
#define TAN_ARCH_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tan/blocks.h"

namespace tanet {

inline constexpr int kNumLevels = 4;

enum class Variant {
  kTan,           // bottlenecks + temporal aggregation modules
  kRes3d,         // 3x3x3 middle convs, temporal striding at downsamples
  kRes2d,         // per-frame network, no temporal layers
  kTanPlainConv,  // each temporal module is a single k=3, d=1 conv
};

std::string VariantName(Variant variant);
// Throws ConfigError for unknown names.
Variant ParseVariant(std::string_view name);

struct ArchConfig {
  int input_spatial = 32;
  int temporal_len = 16;
  std::vector<int> channels = {16, 32, 64, 128};
  std::vector<int> blocks_per_level = {2, 2, 2, 2};
  std::vector<bool> ta_enabled = {true, true, true, true};
  std::vector<int> ta_dilations = {1, 2, 3};
  int num_classes = 8;
  Variant variant = Variant::kTan;

  // Throws ConfigError naming the offending field.
  void Validate() const;

  bool HasTemporalModule(int level) const;
  // Dilation set of the module closing `level` (tan: ta_dilations,
  // tan_plainconv: {1}).
  TAModuleSpec TemporalModuleSpec(int level) const;
  std::vector<BottleneckSpec> LevelBlocks(int level) const;

  // Temporal pooling stride applied after the stem (stage 0) or after level
  // `stage` (1..3). Only res3d strides in time.
  int TemporalStrideAfter(int stage) const;
  // Temporal extent entering the classifier head.
  int OutputFrames() const;
  int OutputFramesFor(int input_frames) const;
};

}  // namespace tanet

#endif  // TAN_ARCH_CONFIG_H_
