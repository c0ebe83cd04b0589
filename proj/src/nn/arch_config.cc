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

#include "tan/arch_config.h"

#include <string>

#include "tan/errors.h"

namespace tanet {

std::string VariantName(Variant variant) {
  switch (variant) {
    case Variant::kTan:
      return "tan";
    case Variant::kRes3d:
      return "res3d";
    case Variant::kRes2d:
      return "res2d";
    case Variant::kTanPlainConv:
      return "tan_plainconv";
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  if (name == "tan") return Variant::kTan;
  if (name == "res3d") return Variant::kRes3d;
  if (name == "res2d") return Variant::kRes2d;
  if (name == "tan_plainconv") return Variant::kTanPlainConv;
  throw ConfigError("variant: unknown value '" + std::string(name) +
                    "' (expected tan, res3d, res2d or tan_plainconv)");
}

void ArchConfig::Validate() const {
  auto need_levels = [](size_t n, const char* field) {
    if (n != kNumLevels) {
      throw ConfigError(std::string(field) + ": expected 4 entries, got " +
                        std::to_string(n));
    }
  };
  need_levels(channels.size(), "channels");
  need_levels(blocks_per_level.size(), "blocks_per_level");
  need_levels(ta_enabled.size(), "ta_enabled");
  // Five halvings (stem, stem pool, three level pools) need at least 32
  // pixels; a 16-pixel input reaches 1x1 before the last level pool.
  if (input_spatial < 32 || input_spatial % 16 != 0) {
    throw ConfigError("input_spatial: must be a multiple of 16 and >= 32, "
                      "got " + std::to_string(input_spatial));
  }
  if (temporal_len < 1) {
    throw ConfigError("temporal_len: must be >= 1, got " +
                      std::to_string(temporal_len));
  }
  for (int c : channels) {
    if (c < 4 || c % 4 != 0) {
      throw ConfigError("channels: each entry must be a positive multiple of "
                        "4, got " + std::to_string(c));
    }
  }
  for (int b : blocks_per_level) {
    if (b < 1) {
      throw ConfigError("blocks_per_level: each entry must be >= 1, got " +
                        std::to_string(b));
    }
  }
  if (num_classes < 1) {
    throw ConfigError("num_classes: must be >= 1, got " +
                      std::to_string(num_classes));
  }
  TAModuleSpec probe{channels[0], 3, ta_dilations};
  try {
    probe.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("ta_dilations: ") + e.what());
  }
  if (variant == Variant::kRes3d && temporal_len % 8 != 0) {
    throw ConfigError("temporal_len: res3d halves T three times, so it must "
                      "be a multiple of 8, got " +
                      std::to_string(temporal_len));
  }
}

bool ArchConfig::HasTemporalModule(int level) const {
  if (variant != Variant::kTan && variant != Variant::kTanPlainConv) {
    return false;
  }
  return ta_enabled.at(level);
}

TAModuleSpec ArchConfig::TemporalModuleSpec(int level) const {
  TAModuleSpec spec;
  spec.channels = channels.at(level);
  spec.kernel = 3;
  spec.dilations =
      variant == Variant::kTanPlainConv ? std::vector<int>{1} : ta_dilations;
  return spec;
}

std::vector<BottleneckSpec> ArchConfig::LevelBlocks(int level) const {
  const int temporal_kernel = variant == Variant::kRes3d ? 3 : 1;
  std::vector<BottleneckSpec> specs;
  int in = level == 0 ? channels[0] : channels[level - 1];
  for (int b = 0; b < blocks_per_level.at(level); ++b) {
    specs.push_back(
        BottleneckSpec::Make(in, channels[level], 1, temporal_kernel));
    in = channels[level];
  }
  return specs;
}

int ArchConfig::TemporalStrideAfter(int stage) const {
  if (variant != Variant::kRes3d) return 1;
  return stage <= 2 ? 2 : 1;
}

int ArchConfig::OutputFrames() const { return OutputFramesFor(temporal_len); }

int ArchConfig::OutputFramesFor(int input_frames) const {
  int frames = input_frames;
  for (int stage = 0; stage < kNumLevels; ++stage) {
    frames /= TemporalStrideAfter(stage);
  }
  return frames;
}

}  // namespace tanet
