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

#include "tan/blocks.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "tan/errors.h"

namespace tanet {
namespace {

template <typename S>
Tensor<S> HeNormal(const Shape& shape, double scale, CounterRng& rng) {
  int64_t fan_in = 1;
  for (size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
  const double stddev = scale * std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<S> values(NumElements(shape));
  for (S& v : values) v = static_cast<S>(rng.NextNormal() * stddev);
  return Tensor<S>::FromData(shape, std::move(values), true);
}

template <typename S>
ConvParams<S> HeConv(const Shape& shape, double scale, CounterRng& rng) {
  return {HeNormal<S>(shape, scale, rng), Tensor<S>::Zeros({shape[0]}, true)};
}

template <typename S>
ConvParams<S> ZeroConv(const Shape& shape) {
  return {Tensor<S>::Zeros(shape, true), Tensor<S>::Zeros({shape[0]}, true)};
}

Shape SpatialKernelShape(const BottleneckSpec& spec) {
  if (spec.temporal_kernel == 1) {
    return {spec.mid_channels, spec.mid_channels, 3, 3};
  }
  return {spec.mid_channels, spec.mid_channels, spec.temporal_kernel, 3, 3};
}

Shape ReduceShape(const BottleneckSpec& spec) {
  return {spec.mid_channels, spec.in_channels, 1, 1};
}

Shape ExpandShape(const BottleneckSpec& spec) {
  return {spec.out_channels, spec.mid_channels, 1, 1};
}

Shape ProjectionShape(const BottleneckSpec& spec) {
  return {spec.out_channels, spec.in_channels, 1, 1};
}

template <typename S>
void CheckConv(const ConvParams<S>& conv, const Shape& expected,
               const std::string& role) {
  if (!conv.weight.defined() || conv.weight.shape() != expected) {
    throw ShapeError(role + " weight should be " + ShapeToString(expected) +
                     ", got " +
                     (conv.weight.defined()
                          ? ShapeToString(conv.weight.shape())
                          : std::string("nothing")));
  }
  if (!conv.bias.defined() || conv.bias.shape() != Shape{expected[0]}) {
    throw ShapeError(role + " bias should be [" +
                     std::to_string(expected[0]) + "]");
  }
}

template <typename S>
void AppendConv(const std::string& prefix, const ConvParams<S>& conv,
                std::vector<NamedTensor<S>>& out) {
  out.emplace_back(prefix + "/weight", conv.weight);
  out.emplace_back(prefix + "/bias", conv.bias);
}

}  // namespace

template <typename S>
Tensor<S> Activate(Tape<S>& tape, const Tensor<S>& x,
                   const ForwardOptions& options) {
  if (options.linear_probe) return x;
  return Relu(tape, x);
}

BottleneckSpec BottleneckSpec::Make(int in_channels, int out_channels,
                                    int spatial_stride, int temporal_kernel) {
  BottleneckSpec spec;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;
  spec.mid_channels = out_channels / 4;
  spec.spatial_stride = spatial_stride;
  spec.temporal_kernel = temporal_kernel;
  return spec;
}

void BottleneckSpec::Validate() const {
  if (in_channels < 1 || mid_channels < 1 || out_channels < 1) {
    throw ConfigError("bottleneck: channel counts must be positive (in=" +
                      std::to_string(in_channels) +
                      ", mid=" + std::to_string(mid_channels) +
                      ", out=" + std::to_string(out_channels) + ")");
  }
  if (spatial_stride < 1) {
    throw ConfigError("bottleneck: spatial_stride must be >= 1");
  }
  if (temporal_kernel < 1 || temporal_kernel % 2 == 0) {
    throw ConfigError("bottleneck: temporal_kernel must be odd and >= 1");
  }
}

int64_t BottleneckSpec::ParameterCount() const {
  int64_t count = NumElements(ReduceShape(*this)) + mid_channels;
  count += NumElements(SpatialKernelShape(*this)) + mid_channels;
  count += NumElements(ExpandShape(*this)) + out_channels;
  if (has_projection()) {
    count += NumElements(ProjectionShape(*this)) + out_channels;
  }
  return count;
}

template <typename S>
BottleneckWeights<S> InitBottleneckWeights(const BottleneckSpec& spec,
                                           CounterRng& rng) {
  spec.Validate();
  BottleneckWeights<S> w;
  w.reduce = HeConv<S>(ReduceShape(spec), 1.0, rng);
  w.spatial = HeConv<S>(SpatialKernelShape(spec), 1.0, rng);
  w.expand = HeConv<S>(ExpandShape(spec), 1.0, rng);
  if (spec.has_projection()) {
    w.projection = HeConv<S>(ProjectionShape(spec), 1.0, rng);
  }
  return w;
}

template <typename S>
BottleneckWeights<S> ZeroBottleneckWeights(const BottleneckSpec& spec) {
  spec.Validate();
  BottleneckWeights<S> w;
  w.reduce = ZeroConv<S>(ReduceShape(spec));
  w.spatial = ZeroConv<S>(SpatialKernelShape(spec));
  w.expand = ZeroConv<S>(ExpandShape(spec));
  if (spec.has_projection()) w.projection = ZeroConv<S>(ProjectionShape(spec));
  return w;
}

template <typename S>
void CheckBottleneckWeights(const BottleneckSpec& spec,
                            const BottleneckWeights<S>& weights) {
  CheckConv(weights.reduce, ReduceShape(spec), "bottleneck reduce");
  CheckConv(weights.spatial, SpatialKernelShape(spec), "bottleneck spatial");
  CheckConv(weights.expand, ExpandShape(spec), "bottleneck expand");
  if (spec.has_projection() != weights.projection.has_value()) {
    throw ShapeError(spec.has_projection()
                         ? "bottleneck needs a projection shortcut"
                         : "bottleneck has an unexpected projection shortcut");
  }
  if (weights.projection) {
    CheckConv(*weights.projection, ProjectionShape(spec),
              "bottleneck projection");
  }
}

template <typename S>
Tensor<S> BottleneckForward(Tape<S>& tape, const Tensor<S>& x,
                            const BottleneckSpec& spec,
                            const BottleneckWeights<S>& weights,
                            const ForwardOptions& options) {
  CheckBottleneckWeights(spec, weights);
  if (x.rank() != 4 || x.dim(1) != spec.in_channels) {
    throw ShapeError("bottleneck expects [T," +
                     std::to_string(spec.in_channels) + ",H,W], got " +
                     ShapeToString(x.shape()));
  }
  const ConvPath path = options.conv_path;
  Tensor<S> h = Conv2dPerFrame(tape, x, weights.reduce.weight,
                               weights.reduce.bias, 1, 0, path);
  h = Activate(tape, h, options);
  if (spec.temporal_kernel == 1) {
    h = Conv2dPerFrame(tape, h, weights.spatial.weight, weights.spatial.bias,
                       spec.spatial_stride, 1, path);
  } else {
    h = Conv3d(tape, h, weights.spatial.weight, weights.spatial.bias,
               spec.spatial_stride, 1, path);
  }
  h = Activate(tape, h, options);
  h = Conv2dPerFrame(tape, h, weights.expand.weight, weights.expand.bias, 1, 0,
                     path);
  Tensor<S> shortcut = x;
  if (weights.projection) {
    shortcut = Conv2dPerFrame(tape, x, weights.projection->weight,
                              weights.projection->bias, spec.spatial_stride, 0,
                              path);
  }
  return Activate(tape, Add(tape, h, shortcut), options);
}

template <typename S>
void AppendBottleneckParameters(const std::string& prefix,
                                const BottleneckWeights<S>& weights,
                                std::vector<NamedTensor<S>>& out) {
  AppendConv(prefix + "/reduce", weights.reduce, out);
  AppendConv(prefix + "/spatial", weights.spatial, out);
  AppendConv(prefix + "/expand", weights.expand, out);
  if (weights.projection) {
    AppendConv(prefix + "/projection", *weights.projection, out);
  }
}

void TAModuleSpec::Validate() const {
  if (channels < 1) throw ConfigError("ta: channels must be positive");
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("ta: kernel must be odd and >= 1, got " +
                      std::to_string(kernel));
  }
  if (dilations.empty()) throw ConfigError("ta: dilations must be non-empty");
  std::set<int> seen;
  for (int d : dilations) {
    if (d < 1) {
      throw ConfigError("ta: dilations must be positive, got " +
                        std::to_string(d));
    }
    if (!seen.insert(d).second) {
      throw ConfigError("ta: duplicate dilation " + std::to_string(d));
    }
  }
}

int64_t TAModuleSpec::ParameterCount() const {
  const int64_t c = channels;
  return static_cast<int64_t>(dilations.size()) * (c * c * kernel + c);
}

template <typename S>
TAWeights<S> InitTAWeights(const TAModuleSpec& spec, CounterRng& rng) {
  spec.Validate();
  TAWeights<S> w;
  const double scale = 1.0 / static_cast<double>(spec.dilations.size());
  for (size_t i = 0; i < spec.dilations.size(); ++i) {
    w.branches.push_back(
        HeConv<S>({spec.channels, spec.channels, spec.kernel}, scale, rng));
  }
  return w;
}

template <typename S>
TAWeights<S> ZeroTAWeights(const TAModuleSpec& spec) {
  spec.Validate();
  TAWeights<S> w;
  for (size_t i = 0; i < spec.dilations.size(); ++i) {
    w.branches.push_back(ZeroConv<S>({spec.channels, spec.channels,
                                      spec.kernel}));
  }
  return w;
}

template <typename S>
void CheckTAWeights(const TAModuleSpec& spec, const TAWeights<S>& weights) {
  if (weights.branches.size() != spec.dilations.size()) {
    throw ShapeError("ta: expected " + std::to_string(spec.dilations.size()) +
                     " branches, got " +
                     std::to_string(weights.branches.size()));
  }
  for (size_t i = 0; i < spec.dilations.size(); ++i) {
    CheckConv(weights.branches[i], {spec.channels, spec.channels, spec.kernel},
              "ta branch d" + std::to_string(spec.dilations[i]));
  }
}

template <typename S>
Tensor<S> TAForward(Tape<S>& tape, const Tensor<S>& x,
                    const TAModuleSpec& spec, const TAWeights<S>& weights,
                    const ForwardOptions& options) {
  CheckTAWeights(spec, weights);
  if (x.rank() != 4 || x.dim(1) != spec.channels) {
    throw ShapeError("ta expects [T," + std::to_string(spec.channels) +
                     ",H,W], got " + ShapeToString(x.shape()));
  }
  Tensor<S> sum = x;
  for (size_t i = 0; i < spec.dilations.size(); ++i) {
    Tensor<S> branch =
        Conv1dTemporal(tape, x, weights.branches[i].weight,
                       weights.branches[i].bias, spec.dilations[i],
                       options.conv_path);
    sum = Add(tape, sum, branch);
  }
  return Activate(tape, sum, options);
}

template <typename S>
void AppendTAParameters(const std::string& prefix, const TAModuleSpec& spec,
                        const TAWeights<S>& weights,
                        std::vector<NamedTensor<S>>& out) {
  for (size_t i = 0; i < spec.dilations.size(); ++i) {
    AppendConv(prefix + "/branch_d" + std::to_string(spec.dilations[i]),
               weights.branches[i], out);
  }
}

int TAReceptiveField(const TAModuleSpec& spec) {
  spec.Validate();
  const int widest = *std::max_element(spec.dilations.begin(),
                                       spec.dilations.end());
  return 1 + widest * (spec.kernel - 1);
}

#define TAN_INSTANTIATE_BLOCKS(S)                                              \
  template Tensor<S> Activate(Tape<S>&, const Tensor<S>&,                     \
                              const ForwardOptions&);                         \
  template BottleneckWeights<S> InitBottleneckWeights(const BottleneckSpec&,  \
                                                      CounterRng&);           \
  template BottleneckWeights<S> ZeroBottleneckWeights(const BottleneckSpec&); \
  template void CheckBottleneckWeights(const BottleneckSpec&,                 \
                                       const BottleneckWeights<S>&);          \
  template Tensor<S> BottleneckForward(Tape<S>&, const Tensor<S>&,            \
                                       const BottleneckSpec&,                 \
                                       const BottleneckWeights<S>&,           \
                                       const ForwardOptions&);                \
  template void AppendBottleneckParameters(                                   \
      const std::string&, const BottleneckWeights<S>&,                        \
      std::vector<NamedTensor<S>>&);                                          \
  template TAWeights<S> InitTAWeights(const TAModuleSpec&, CounterRng&);      \
  template TAWeights<S> ZeroTAWeights(const TAModuleSpec&);                   \
  template void CheckTAWeights(const TAModuleSpec&, const TAWeights<S>&);     \
  template Tensor<S> TAForward(Tape<S>&, const Tensor<S>&,                    \
                               const TAModuleSpec&, const TAWeights<S>&,      \
                               const ForwardOptions&);                        \
  template void AppendTAParameters(const std::string&, const TAModuleSpec&,   \
                                   const TAWeights<S>&,                       \
                                   std::vector<NamedTensor<S>>&);

TAN_INSTANTIATE_BLOCKS(float)
TAN_INSTANTIATE_BLOCKS(double)

}  // namespace tanet
