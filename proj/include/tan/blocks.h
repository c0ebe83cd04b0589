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

#ifndef TAN_BLOCKS_H_
#define TAN_BLOCKS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tan/ops.h"
#include "tan/random.h"
#include "tan/tape.h"
#include "tan/tensor.h"

namespace tanet {

template <typename S>
using NamedTensor = std::pair<std::string, Tensor<S>>;

// Switches a network into its linearized probe form: activations become
// identities and max pools become average pools, so the support of a
// response is exactly the receptive field.
struct ForwardOptions {
  bool linear_probe = false;
  ConvPath conv_path = DefaultConvPath();
};

template <typename S>
Tensor<S> Activate(Tape<S>& tape, const Tensor<S>& x,
                   const ForwardOptions& options);

template <typename S>
struct ConvParams {
  Tensor<S> weight;
  Tensor<S> bias;
};

// 1x1 reduce -> 3x3 -> 1x1 expand with a residual shortcut.
struct BottleneckSpec {
  int in_channels = 0;
  int mid_channels = 0;
  int out_channels = 0;
  int spatial_stride = 1;
  // 1 for per-frame blocks; 3 turns the middle conv into a 3x3x3 conv.
  int temporal_kernel = 1;

  // mid = out / 4.
  static BottleneckSpec Make(int in_channels, int out_channels,
                             int spatial_stride = 1, int temporal_kernel = 1);

  bool has_projection() const {
    return in_channels != out_channels || spatial_stride != 1;
  }
  void Validate() const;
  int64_t ParameterCount() const;
};

template <typename S>
struct BottleneckWeights {
  ConvParams<S> reduce;
  ConvParams<S> spatial;
  ConvParams<S> expand;
  std::optional<ConvParams<S>> projection;
};

// He-normal (fan-in) weights, zero biases.
template <typename S>
BottleneckWeights<S> InitBottleneckWeights(const BottleneckSpec& spec,
                                           CounterRng& rng);

template <typename S>
BottleneckWeights<S> ZeroBottleneckWeights(const BottleneckSpec& spec);

// Throws ShapeError when any tensor disagrees with `spec`.
template <typename S>
void CheckBottleneckWeights(const BottleneckSpec& spec,
                            const BottleneckWeights<S>& weights);

// relu(expand(relu(spatial(relu(reduce(x))))) + shortcut(x)); T untouched.
template <typename S>
Tensor<S> BottleneckForward(Tape<S>& tape, const Tensor<S>& x,
                            const BottleneckSpec& spec,
                            const BottleneckWeights<S>& weights,
                            const ForwardOptions& options = {});

// Appends "<prefix>/<layer>/{weight,bias}" entries.
template <typename S>
void AppendBottleneckParameters(const std::string& prefix,
                                const BottleneckWeights<S>& weights,
                                std::vector<NamedTensor<S>>& out);

// Temporal aggregation: parallel dilated temporal convs plus identity.
struct TAModuleSpec {
  int channels = 0;
  int kernel = 3;
  std::vector<int> dilations = {1, 2, 3};

  void Validate() const;
  int64_t ParameterCount() const;
};

template <typename S>
struct TAWeights {
  std::vector<ConvParams<S>> branches;  // one per dilation, C -> C
};

// He-normal scaled by 1/|dilations| so the branch sum starts at unit order.
template <typename S>
TAWeights<S> InitTAWeights(const TAModuleSpec& spec, CounterRng& rng);

template <typename S>
TAWeights<S> ZeroTAWeights(const TAModuleSpec& spec);

template <typename S>
void CheckTAWeights(const TAModuleSpec& spec, const TAWeights<S>& weights);

// relu(x + sum_d branch_d(x)); output shape equals input shape.
template <typename S>
Tensor<S> TAForward(Tape<S>& tape, const Tensor<S>& x,
                    const TAModuleSpec& spec, const TAWeights<S>& weights,
                    const ForwardOptions& options = {});

// Appends "<prefix>/branch_d<d>/{weight,bias}" entries.
template <typename S>
void AppendTAParameters(const std::string& prefix, const TAModuleSpec& spec,
                        const TAWeights<S>& weights,
                        std::vector<NamedTensor<S>>& out);

// Frames visible to one output: 1 + max_d d * (k - 1).
int TAReceptiveField(const TAModuleSpec& spec);

}  // namespace tanet

#endif  // TAN_BLOCKS_H_
