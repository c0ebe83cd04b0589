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

#ifndef TAN_MODEL_H_
#define TAN_MODEL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tan/arch_config.h"
#include "tan/blocks.h"
#include "tan/tape.h"
#include "tan/tensor.h"

namespace tanet {

// Stem (7x7/2 conv, 3x3/2 max pool) -> four levels of bottlenecks, each
// optionally closed by a temporal module -> 2x2/2 max pool after levels 1-3
// -> spatial average pool -> per-frame linear head.
//
// Copies share parameter storage; use Clone() for an independent model.
template <typename S>
class Model {
 public:
  // Validates `config` and draws every weight from a stream keyed by `seed`.
  static Model Build(const ArchConfig& config, uint64_t seed);

  Model Clone() const;

  const ArchConfig& config() const { return config_; }

  // Level-4 feature map [T', C4, h, w] before spatial pooling.
  Tensor<S> ForwardFeatures(Tape<S>& tape, const Tensor<S>& clip,
                            const ForwardOptions& options = {}) const;

  // Per-frame logits [T, num_classes]. When the variant pools in time the
  // head output is repeated back to the input frame count.
  Tensor<S> ForwardDense(Tape<S>& tape, const Tensor<S>& clip,
                         const ForwardOptions& options = {}) const;

  // Registry in canonical order; names are unique.
  const std::vector<NamedTensor<S>>& parameters() const { return registry_; }
  // Throws std::out_of_range for unknown names.
  Tensor<S> parameter(std::string_view name) const;
  int64_t ParameterCount() const;

  void ZeroGrad();
  // Sets every "/weight" entry to `weight` and every "/bias" entry to `bias`.
  void FillParameters(S weight, S bias);
  // Zeroes every temporal-module parameter.
  void ZeroTemporalModules();

 private:
  struct Level {
    std::vector<BottleneckSpec> specs;
    std::vector<BottleneckWeights<S>> blocks;
    std::optional<TAModuleSpec> temporal_spec;
    std::optional<TAWeights<S>> temporal;
  };

  Model() = default;
  void RebuildRegistry();
  void CheckClip(const Tensor<S>& clip) const;

  ArchConfig config_;
  ConvParams<S> stem_;
  std::array<Level, kNumLevels> levels_;
  ConvParams<S> head_;
  std::vector<NamedTensor<S>> registry_;
};

// Parameters owned by temporal modules (TA or plain temporal conv).
bool IsTemporalParameterName(std::string_view name);

// Mean over frames of a [T, K] score matrix.
template <typename S>
Tensor<S> VideoScore(const Tensor<S>& frame_scores);

// Mean over frames first..last inclusive of a [T, K] score matrix. Sums in
// frame order, so the full range reproduces VideoScore exactly.
template <typename S>
Tensor<S> MeanOverFrames(const Tensor<S>& frame_scores, int64_t first,
                         int64_t last);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace tanet

#endif  // TAN_MODEL_H_
