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

#include "tan/analysis.h"

#include <fmt/format.h>

#include <algorithm>
#include <string>

#include "tan/checkpoint.h"
#include "tan/diagnostics.h"
#include "tan/errors.h"
#include "tan/ops.h"

namespace tanet {

std::string AxisName(Axis axis) {
  return axis == Axis::kSpatial ? "spatial" : "temporal";
}

Axis ParseAxis(const std::string& name) {
  if (name == "spatial") return Axis::kSpatial;
  if (name == "temporal") return Axis::kTemporal;
  throw ConfigError("axis: expected 'spatial' or 'temporal', got '" + name +
                    "'");
}

int64_t LayerDescriptor::ParameterCount() const {
  const int64_t cin = in_channels, cout = out_channels;
  switch (kind) {
    case LayerKind::kConv2d:
      return cin * cout * kernel * kernel + cout;
    case LayerKind::kConv1dT:
      return branches * (cin * cout * kernel + cout);
    case LayerKind::kConv3d:
      return cin * cout * temporal_kernel * kernel * kernel + cout;
    case LayerKind::kLinear:
      return cin * cout + cout;
    case LayerKind::kPool2d:
    case LayerKind::kPoolT:
      return 0;
  }
  return 0;
}

int64_t LayerDescriptor::Macs() const {
  const int64_t weights = ParameterCount() - branches * out_channels;
  if (weights <= 0) return 0;
  return weights * out_frames * out_height * out_width;
}

namespace {

struct Extent {
  int64_t frames, height, width;
};

int64_t PooledSize(int64_t n, int kernel, int stride, int pad) {
  return (n + 2 * pad - kernel) / stride + 1;
}

class SequenceBuilder {
 public:
  explicit SequenceBuilder(const ArchConfig& c)
      : extent_{c.temporal_len, c.input_spatial, c.input_spatial} {}

  void Spatial(std::string name, LayerKind kind, int kernel, int stride,
               int pad, int cin, int cout, bool main_path = true) {
    LayerDescriptor d;
    d.name = std::move(name);
    d.kind = kind;
    d.kernel = kernel;
    d.temporal_kernel = kind == LayerKind::kConv3d ? 3 : 1;
    d.stride = stride;
    d.in_channels = cin;
    d.out_channels = cout;
    d.on_main_path = main_path;
    Extent out = extent_;
    out.height = PooledSize(extent_.height, kernel, stride, pad);
    out.width = PooledSize(extent_.width, kernel, stride, pad);
    Push(d, out, main_path);
  }

  void Temporal(std::string name, LayerKind kind, int kernel, int stride,
                int dilation, int branches, int channels) {
    LayerDescriptor d;
    d.name = std::move(name);
    d.kind = kind;
    d.kernel = kernel;
    d.stride = stride;
    d.dilation = dilation;
    d.branches = branches;
    d.in_channels = channels;
    d.out_channels = channels;
    Extent out = extent_;
    if (kind == LayerKind::kPoolT) {
      out.frames = PooledSize(extent_.frames, kernel, stride, 0);
    }
    Push(d, out, true);
  }

  void Head(int cin, int classes) {
    LayerDescriptor d;
    d.name = "head/fc";
    d.kind = LayerKind::kLinear;
    d.in_channels = cin;
    d.out_channels = classes;
    d.on_main_path = false;
    Push(d, Extent{extent_.frames, 1, 1}, false);
  }

  std::vector<LayerDescriptor> Take() { return std::move(layers_); }

 private:
  void Push(LayerDescriptor d, const Extent& out, bool advance) {
    d.out_frames = out.frames;
    d.out_height = out.height;
    d.out_width = out.width;
    layers_.push_back(std::move(d));
    if (advance) extent_ = out;
  }

  Extent extent_;
  std::vector<LayerDescriptor> layers_;
};

}  // namespace

std::vector<LayerDescriptor> LayerSequence(const ArchConfig& config) {
  config.Validate();
  SequenceBuilder b(config);
  b.Spatial("stem/conv", LayerKind::kConv2d, 7, 2, 3, 3, config.channels[0]);
  b.Spatial("stem/pool", LayerKind::kPool2d, 3, 2, 1, config.channels[0],
            config.channels[0]);
  auto temporal_pool = [&](int stage, const std::string& name, int channels) {
    const int stride = config.TemporalStrideAfter(stage);
    if (stride > 1) {
      b.Temporal(name, LayerKind::kPoolT, stride, stride, 1, 1, channels);
    }
  };
  temporal_pool(0, "stem/tpool", config.channels[0]);

  for (int level = 0; level < kNumLevels; ++level) {
    const std::string prefix = "level" + std::to_string(level + 1);
    const auto specs = config.LevelBlocks(level);
    for (size_t i = 0; i < specs.size(); ++i) {
      const BottleneckSpec& s = specs[i];
      const std::string block = prefix + "/block" + std::to_string(i);
      b.Spatial(block + "/reduce", LayerKind::kConv2d, 1, 1, 0,
                s.in_channels, s.mid_channels);
      b.Spatial(block + "/spatial",
                s.temporal_kernel > 1 ? LayerKind::kConv3d
                                      : LayerKind::kConv2d,
                3, s.spatial_stride, 1, s.mid_channels, s.mid_channels);
      b.Spatial(block + "/expand", LayerKind::kConv2d, 1, 1, 0,
                s.mid_channels, s.out_channels);
      if (s.has_projection()) {
        b.Spatial(block + "/projection", LayerKind::kConv2d, 1,
                  s.spatial_stride, 0, s.in_channels, s.out_channels, false);
      }
    }
    if (config.HasTemporalModule(level)) {
      const TAModuleSpec spec = config.TemporalModuleSpec(level);
      const int max_d =
          *std::max_element(spec.dilations.begin(), spec.dilations.end());
      b.Temporal(prefix + (config.variant == Variant::kTanPlainConv
                               ? "/tconv"
                               : "/ta"),
                 LayerKind::kConv1dT, spec.kernel, 1, max_d,
                 static_cast<int>(spec.dilations.size()), spec.channels);
    }
    if (level + 1 < kNumLevels) {
      const std::string pool = "downsample" + std::to_string(level + 1);
      b.Spatial(pool + "/pool", LayerKind::kPool2d, 2, 2, 0,
                config.channels[level], config.channels[level]);
      temporal_pool(level + 1, pool + "/tpool", config.channels[level]);
    }
  }
  b.Head(config.channels[kNumLevels - 1], config.num_classes);
  return b.Take();
}

int ReceptiveField(const std::vector<LayerDescriptor>& layers, Axis axis) {
  int64_t r = 1, j = 1;
  for (const LayerDescriptor& d : layers) {
    if (!d.on_main_path) continue;
    int kernel = 1, dilation = 1, stride = 1;
    const bool spatial_kind = d.kind == LayerKind::kConv2d ||
                              d.kind == LayerKind::kPool2d ||
                              d.kind == LayerKind::kConv3d;
    const bool temporal_kind = d.kind == LayerKind::kConv1dT ||
                               d.kind == LayerKind::kPoolT ||
                               d.kind == LayerKind::kConv3d;
    if (axis == Axis::kSpatial && spatial_kind) {
      kernel = d.kernel;
      stride = d.stride;
    } else if (axis == Axis::kTemporal && temporal_kind) {
      kernel = d.kind == LayerKind::kConv3d ? d.temporal_kernel : d.kernel;
      dilation = d.kind == LayerKind::kConv1dT ? d.dilation : 1;
      stride = d.kind == LayerKind::kPoolT ? d.stride : 1;
    }
    r += static_cast<int64_t>(kernel - 1) * dilation * j;
    j *= stride;
  }
  return static_cast<int>(r);
}

namespace {

ProbeResult ProbeOnce(const ArchConfig& base, Axis axis, int extent) {
  ArchConfig c = base;
  if (axis == Axis::kTemporal) {
    c.temporal_len = extent;
  } else {
    c.input_spatial = extent;
    // One frame is enough spatially; res3d needs three halvings of T.
    c.temporal_len = base.variant == Variant::kRes3d ? 8 : 1;
  }
  Model<double> model = Model<double>::Build(c, 0);
  model.FillParameters(1.0, 0.0);
  for (const auto& entry : model.parameters()) {
    entry.second.set_requires_grad(false);
  }
  Tensor<double> clip = Tensor<double>::Zeros(
      {c.temporal_len, 3, c.input_spatial, c.input_spatial}, true);

  ForwardOptions options;
  options.linear_probe = true;
  ScopedWarningHandler quiet([](const std::string&) {});
  Tape<double> tape;
  Tensor<double> features = model.ForwardFeatures(tape, clip, options);
  const int64_t ft = features.dim(0), fc = features.dim(1),
                fh = features.dim(2), fw = features.dim(3);
  Tensor<double> seed = Tensor<double>::Zeros(features.shape());
  seed.mutable_data()[((ft / 2 * fc) * fh + fh / 2) * fw + fw / 2] = 1.0;
  Tensor<double> loss = Sum(tape, Mul(tape, features, seed));
  tape.Backward(loss);

  int64_t first = -1, last = -1;
  const int64_t frames = clip.dim(0), side = clip.dim(2);
  auto grad = clip.grad();
  for (int64_t i = 0; i < clip.numel(); ++i) {
    if (grad[i] == 0) continue;
    const int64_t pos = axis == Axis::kTemporal ? i / (3 * side * side)
                                                : (i / side) % side;
    if (first < 0 || pos < first) first = pos;
    last = std::max(last, pos);
  }
  ProbeResult result;
  result.input_extent = extent;
  if (first < 0) return result;
  const int64_t limit = axis == Axis::kTemporal ? frames : side;
  result.extent = static_cast<int>(last - first + 1);
  result.saturated = first == 0 || last == limit - 1;
  return result;
}

}  // namespace

ProbeResult ImpulseProbe(const ArchConfig& config, Axis axis, int max_extent) {
  config.Validate();
  int extent = axis == Axis::kTemporal ? config.temporal_len
                                       : config.input_spatial;
  ProbeResult result = ProbeOnce(config, axis, extent);
  while (result.saturated && extent * 2 <= max_extent) {
    extent *= 2;
    result = ProbeOnce(config, axis, extent);
  }
  return result;
}

ProbeResult ImpulseProbe(const Model<float>& model, Axis axis,
                         int max_extent) {
  return ImpulseProbe(model.config(), axis, max_extent);
}

AnalysisReport CountParamsFlops(const ArchConfig& config) {
  const std::vector<LayerDescriptor> layers = LayerSequence(config);
  AnalysisReport report;
  report.variant = VariantName(config.variant);
  const double frames = config.temporal_len;

  const std::vector<std::string> groups = {"stem", "level1", "level2",
                                           "level3", "level4", "head"};
  size_t next = 0;
  for (const std::string& group : groups) {
    size_t end = next;
    for (size_t i = next; i < layers.size(); ++i) {
      if (layers[i].name.rfind(group + "/", 0) == 0) end = i + 1;
    }
    const std::vector<LayerDescriptor> prefix(layers.begin(),
                                              layers.begin() + end);
    LevelReport row;
    row.name = group;
    row.spatial_rf = ReceptiveField(prefix, Axis::kSpatial);
    row.temporal_rf = ReceptiveField(prefix, Axis::kTemporal);
    int64_t macs = 0;
    for (const LayerDescriptor& d : prefix) {
      row.cumulative_params += d.ParameterCount();
      macs += d.Macs();
    }
    row.cumulative_macs_per_frame = macs / frames;
    report.levels.push_back(row);
    next = end;
  }
  for (const LayerDescriptor& d : layers) {
    report.params += d.ParameterCount();
    report.macs += d.Macs();
  }
  report.macs_per_frame = report.macs / frames;
  report.spatial_rf = ReceptiveField(layers, Axis::kSpatial);
  report.temporal_rf = ReceptiveField(layers, Axis::kTemporal);
  report.output_frames = config.OutputFrames();
  return report;
}

int64_t MeasureForwardMacs(const ArchConfig& config) {
  const Model<float> model = Model<float>::Build(config, 0);
  const Tensor<float> clip = Tensor<float>::Zeros(
      {config.temporal_len, 3, config.input_spatial, config.input_spatial});
  Tape<float> tape(Tape<float>::Mode::kInference);
  MacCounter counter;
  model.ForwardDense(tape, clip);
  return counter.count();
}

int64_t CheckpointPayloadParams(const ArchConfig& config) {
  const Model<float> model = Model<float>::Build(config, 0);
  const TensorRecords records = ModelRecords(model);
  int64_t payload = static_cast<int64_t>(EncodeTensorRecords(records).size()) -
                    static_cast<int64_t>(sizeof(kTensorFileMagic)) - 8;
  for (const TensorRecord& r : records) {
    payload -= EncodedEntrySize(r.name, r.tensor.shape()) -
               4 * r.tensor.numel();
  }
  return payload / 4;
}

std::vector<ComparisonRow> CompareVariants(
    const std::vector<ArchConfig>& configs) {
  std::vector<ComparisonRow> rows;
  for (const ArchConfig& c : configs) {
    const AnalysisReport report = CountParamsFlops(c);
    ComparisonRow row;
    row.variant = report.variant;
    row.params = report.params;
    row.macs = report.macs_per_frame;
    row.temporal_rf = report.temporal_rf;
    row.spatial_rf = report.spatial_rf;
    row.output_t = report.output_frames;
    rows.push_back(row);
  }
  return rows;
}

std::string FormatComparisonTable(const std::vector<ComparisonRow>& rows) {
  std::string out = fmt::format("{:<14} {:>10} {:>14} {:>11} {:>10} {:>8}\n",
                                "variant", "params", "macs/frame",
                                "temporal_rf", "spatial_rf", "output_t");
  for (const ComparisonRow& r : rows) {
    out += fmt::format("{:<14} {:>10} {:>14.0f} {:>11} {:>10} {:>8}\n",
                       r.variant, r.params, r.macs, r.temporal_rf,
                       r.spatial_rf, r.output_t);
  }
  return out;
}

std::string FormatComparisonCsv(const std::vector<ComparisonRow>& rows) {
  std::string out = "variant,params,macs,temporal_rf,spatial_rf,output_t\n";
  for (const ComparisonRow& r : rows) {
    out += fmt::format("{},{},{:.0f},{},{},{}\n", r.variant, r.params, r.macs,
                       r.temporal_rf, r.spatial_rf, r.output_t);
  }
  return out;
}

std::string FormatAnalysisReport(const AnalysisReport& report) {
  std::string out = fmt::format("{:<8} {:>10} {:>11} {:>12} {:>16}\n", "stage",
                                "spatial_rf", "temporal_rf", "params(cum)",
                                "macs/frame(cum)");
  for (const LevelReport& l : report.levels) {
    out += fmt::format("{:<8} {:>10} {:>11} {:>12} {:>16.0f}\n", l.name,
                       l.spatial_rf, l.temporal_rf, l.cumulative_params,
                       l.cumulative_macs_per_frame);
  }
  out += fmt::format("total params {}, macs per input frame {:.0f}, output T "
                     "{}\n",
                     report.params, report.macs_per_frame,
                     report.output_frames);
  return out;
}

}  // namespace tanet
