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

#include "tan/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tan/ops.h"
#include "tan/random.h"

namespace tanet {
namespace {

// Stream id for weight initialization ("tanmodel").
constexpr uint64_t kInitStream = 0x74616e6d6f64656cULL;

constexpr double kHeadInitStddev = 0.01;

template <typename S>
Tensor<S> NormalTensor(const Shape& shape, double stddev, CounterRng& rng) {
  std::vector<S> values(NumElements(shape));
  for (S& v : values) v = static_cast<S>(rng.NextNormal() * stddev);
  return Tensor<S>::FromData(shape, std::move(values), true);
}

std::string LevelPrefix(int level) {
  return "level" + std::to_string(level + 1);
}

template <typename S>
ConvParams<S> CloneConv(const ConvParams<S>& conv) {
  ConvParams<S> out{conv.weight.Clone(), conv.bias.Clone()};
  out.weight.set_requires_grad(conv.weight.requires_grad());
  out.bias.set_requires_grad(conv.bias.requires_grad());
  return out;
}

}  // namespace

bool IsTemporalParameterName(std::string_view name) {
  return name.find("/ta/") != std::string_view::npos ||
         name.find("/tconv/") != std::string_view::npos;
}

template <typename S>
Model<S> Model<S>::Build(const ArchConfig& config, uint64_t seed) {
  config.Validate();
  Model model;
  model.config_ = config;
  CounterRng rng(seed, kInitStream);

  const double stem_fan_in = 3.0 * 7 * 7;
  model.stem_.weight = NormalTensor<S>({config.channels[0], 3, 7, 7},
                                       std::sqrt(2.0 / stem_fan_in), rng);
  model.stem_.bias = Tensor<S>::Zeros({config.channels[0]}, true);

  for (int level = 0; level < kNumLevels; ++level) {
    Level& l = model.levels_[level];
    l.specs = config.LevelBlocks(level);
    for (const BottleneckSpec& spec : l.specs) {
      l.blocks.push_back(InitBottleneckWeights<S>(spec, rng));
    }
    if (config.HasTemporalModule(level)) {
      l.temporal_spec = config.TemporalModuleSpec(level);
      l.temporal = InitTAWeights<S>(*l.temporal_spec, rng);
    }
  }

  const int width = config.channels[kNumLevels - 1];
  model.head_.weight =
      NormalTensor<S>({config.num_classes, width}, kHeadInitStddev, rng);
  model.head_.bias = Tensor<S>::Zeros({config.num_classes}, true);
  model.RebuildRegistry();
  return model;
}

template <typename S>
Model<S> Model<S>::Clone() const {
  Model copy;
  copy.config_ = config_;
  copy.stem_ = CloneConv(stem_);
  for (int level = 0; level < kNumLevels; ++level) {
    const Level& src = levels_[level];
    Level& dst = copy.levels_[level];
    dst.specs = src.specs;
    for (const auto& block : src.blocks) {
      BottleneckWeights<S> b;
      b.reduce = CloneConv(block.reduce);
      b.spatial = CloneConv(block.spatial);
      b.expand = CloneConv(block.expand);
      if (block.projection) b.projection = CloneConv(*block.projection);
      dst.blocks.push_back(std::move(b));
    }
    dst.temporal_spec = src.temporal_spec;
    if (src.temporal) {
      TAWeights<S> t;
      for (const auto& branch : src.temporal->branches) {
        t.branches.push_back(CloneConv(branch));
      }
      dst.temporal = std::move(t);
    }
  }
  copy.head_ = CloneConv(head_);
  copy.RebuildRegistry();
  return copy;
}

template <typename S>
void Model<S>::RebuildRegistry() {
  registry_.clear();
  registry_.emplace_back("stem/conv/weight", stem_.weight);
  registry_.emplace_back("stem/conv/bias", stem_.bias);
  for (int level = 0; level < kNumLevels; ++level) {
    const Level& l = levels_[level];
    for (size_t b = 0; b < l.blocks.size(); ++b) {
      AppendBottleneckParameters(
          LevelPrefix(level) + "/block" + std::to_string(b), l.blocks[b],
          registry_);
    }
    if (l.temporal) {
      const char* role =
          config_.variant == Variant::kTanPlainConv ? "/tconv" : "/ta";
      AppendTAParameters(LevelPrefix(level) + role, *l.temporal_spec,
                         *l.temporal, registry_);
    }
  }
  registry_.emplace_back("head/fc/weight", head_.weight);
  registry_.emplace_back("head/fc/bias", head_.bias);
}

template <typename S>
Tensor<S> Model<S>::parameter(std::string_view name) const {
  for (const auto& [n, t] : registry_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

template <typename S>
int64_t Model<S>::ParameterCount() const {
  int64_t count = 0;
  for (const auto& entry : registry_) count += entry.second.numel();
  return count;
}

template <typename S>
void Model<S>::ZeroGrad() {
  for (auto& entry : registry_) entry.second.DropGrad();
}

template <typename S>
void Model<S>::FillParameters(S weight, S bias) {
  for (auto& [name, tensor] : registry_) {
    const bool is_bias = name.size() >= 5 &&
                         name.compare(name.size() - 5, 5, "/bias") == 0;
    auto values = tensor.mutable_data();
    std::fill(values.begin(), values.end(), is_bias ? bias : weight);
  }
}

template <typename S>
void Model<S>::ZeroTemporalModules() {
  for (auto& [name, tensor] : registry_) {
    if (!IsTemporalParameterName(name)) continue;
    auto values = tensor.mutable_data();
    std::fill(values.begin(), values.end(), S(0));
  }
}

template <typename S>
void Model<S>::CheckClip(const Tensor<S>& clip) const {
  if (clip.rank() != 4 || clip.dim(1) != 3 ||
      clip.dim(2) != config_.input_spatial ||
      clip.dim(3) != config_.input_spatial) {
    throw ShapeError("model expects a clip [T,3," +
                     std::to_string(config_.input_spatial) + "," +
                     std::to_string(config_.input_spatial) + "], got " +
                     ShapeToString(clip.shape()));
  }
  if (config_.variant == Variant::kRes3d && clip.dim(0) % 8 != 0) {
    throw ShapeError("res3d needs a frame count divisible by 8, got " +
                     std::to_string(clip.dim(0)));
  }
}

template <typename S>
Tensor<S> Model<S>::ForwardFeatures(Tape<S>& tape, const Tensor<S>& clip,
                                    const ForwardOptions& options) const {
  CheckClip(clip);
  auto spatial_pool = [&](const Tensor<S>& x, int kernel, int stride,
                          int pad) {
    return options.linear_probe
               ? AvgPool2dPerFrame(tape, x, kernel, stride, pad)
               : MaxPool2dPerFrame(tape, x, kernel, stride, pad);
  };
  auto temporal_pool = [&](const Tensor<S>& x, int stage) {
    const int stride = config_.TemporalStrideAfter(stage);
    if (stride == 1) return x;
    return options.linear_probe ? AvgPoolTemporal(tape, x, stride, stride)
                                : MaxPoolTemporal(tape, x, stride, stride);
  };

  Tensor<S> x = Conv2dPerFrame(tape, clip, stem_.weight, stem_.bias, 2, 3,
                               options.conv_path);
  x = Activate(tape, x, options);
  x = spatial_pool(x, 3, 2, 1);
  x = temporal_pool(x, 0);
  for (int level = 0; level < kNumLevels; ++level) {
    const Level& l = levels_[level];
    for (size_t b = 0; b < l.blocks.size(); ++b) {
      x = BottleneckForward(tape, x, l.specs[b], l.blocks[b], options);
    }
    if (l.temporal) {
      x = TAForward(tape, x, *l.temporal_spec, *l.temporal, options);
    }
    if (level + 1 < kNumLevels) {
      x = spatial_pool(x, 2, 2, 0);
      x = temporal_pool(x, level + 1);
    }
  }
  return x;
}

template <typename S>
Tensor<S> Model<S>::ForwardDense(Tape<S>& tape, const Tensor<S>& clip,
                                 const ForwardOptions& options) const {
  Tensor<S> features = ForwardFeatures(tape, clip, options);
  Tensor<S> pooled = SpatialAvgPool(tape, features);
  Tensor<S> logits = Linear(tape, pooled, head_.weight, head_.bias);
  const int64_t frames = clip.dim(0);
  if (logits.dim(0) != frames) {
    logits = RepeatFrames(tape, logits,
                          static_cast<int>(frames / logits.dim(0)));
  }
  return logits;
}

template <typename S>
Tensor<S> MeanOverFrames(const Tensor<S>& frame_scores, int64_t first,
                         int64_t last) {
  if (frame_scores.rank() != 2) {
    throw ShapeError("frame scores must be [T,K], got " +
                     ShapeToString(frame_scores.shape()));
  }
  const int64_t classes = frame_scores.dim(1);
  if (first < 0 || last < first || last >= frame_scores.dim(0)) {
    throw std::invalid_argument(
        "frame range [" + std::to_string(first) + "," + std::to_string(last) +
        "] invalid for " + std::to_string(frame_scores.dim(0)) + " frames");
  }
  std::vector<S> sums(classes, S(0));
  auto data = frame_scores.data();
  for (int64_t t = first; t <= last; ++t) {
    for (int64_t k = 0; k < classes; ++k) sums[k] += data[t * classes + k];
  }
  const S count = static_cast<S>(last - first + 1);
  for (S& v : sums) v /= count;
  return Tensor<S>::FromData({classes}, std::move(sums));
}

template <typename S>
Tensor<S> VideoScore(const Tensor<S>& frame_scores) {
  if (frame_scores.rank() != 2) {
    throw ShapeError("frame scores must be [T,K], got " +
                     ShapeToString(frame_scores.shape()));
  }
  return MeanOverFrames(frame_scores, 0, frame_scores.dim(0) - 1);
}

template class Model<float>;
template class Model<double>;
template Tensor<float> VideoScore(const Tensor<float>&);
template Tensor<double> VideoScore(const Tensor<double>&);
template Tensor<float> MeanOverFrames(const Tensor<float>&, int64_t, int64_t);
template Tensor<double> MeanOverFrames(const Tensor<double>&, int64_t,
                                       int64_t);

}  // namespace tanet
