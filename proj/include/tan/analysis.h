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

#ifndef TAN_ANALYSIS_H_
#define TAN_ANALYSIS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tan/arch_config.h"
#include "tan/model.h"

namespace tanet {

enum class Axis { kSpatial, kTemporal };

std::string AxisName(Axis axis);
// Accepts "spatial" or "temporal"; throws ConfigError otherwise.
Axis ParseAxis(const std::string& name);

enum class LayerKind {
  kConv2d,    // per-frame spatial conv
  kConv1dT,   // temporal conv; a TA module is one entry with `branches`
  kConv3d,    // joint kernel: spatial `kernel`, temporal `temporal_kernel`
  kPool2d,
  kPoolT,
  kLinear,    // per-frame classifier
};

struct LayerDescriptor {
  std::string name;
  LayerKind kind = LayerKind::kConv2d;
  int kernel = 1;
  int temporal_kernel = 1;
  int stride = 1;
  int dilation = 1;
  int in_channels = 0;
  int out_channels = 0;
  // Parallel branches sharing input and output (TA modules); their receptive
  // field is the union, so `dilation` holds the largest branch dilation.
  int branches = 1;
  // False for residual projections: they add parameters but never widen the
  // receptive field of the main path.
  bool on_main_path = true;
  // Output extent for a clip of the config's size.
  int64_t out_frames = 0;
  int64_t out_height = 0;
  int64_t out_width = 0;

  int64_t ParameterCount() const;
  // Multiply-accumulates over the whole output, bias adds excluded.
  int64_t Macs() const;
};

// Every layer of the network in execution order, from stem to head.
std::vector<LayerDescriptor> LayerSequence(const ArchConfig& config);

// r <- 1, j <- 1; per layer on `axis`: r += (k - 1) * d * j, j *= stride.
int ReceptiveField(const std::vector<LayerDescriptor>& layers, Axis axis);

struct ProbeResult {
  int extent = 0;          // span of the response in input units
  bool saturated = false;  // response reached the input border
  int input_extent = 0;    // size of the probed input along the axis
};

// Linearized copy of the architecture (identity activations, average pools,
// unit weights, zero biases). A one-hot seed on the centre unit of the final
// feature map is propagated back to the input; the span of the nonzero
// response is the receptive field. The probed axis starts at the config's
// size and doubles while the response touches the border, up to
// `max_extent`.
ProbeResult ImpulseProbe(const ArchConfig& config, Axis axis,
                         int max_extent = 1024);
ProbeResult ImpulseProbe(const Model<float>& model, Axis axis,
                         int max_extent = 1024);

struct LevelReport {
  std::string name;
  int spatial_rf = 0;
  int temporal_rf = 0;
  int64_t cumulative_params = 0;
  double cumulative_macs_per_frame = 0;
};

struct AnalysisReport {
  std::string variant;
  std::vector<LevelReport> levels;  // stem, level1..4, head
  int64_t params = 0;
  int64_t macs = 0;  // whole clip of temporal_len frames
  double macs_per_frame = 0;
  int spatial_rf = 0;
  int temporal_rf = 0;
  int output_frames = 0;
};

AnalysisReport CountParamsFlops(const ArchConfig& config);

// Cross-checks for the analytic counts: multiply-accumulates counted by the
// ops during one forward pass of a clip of the config's size, and the number
// of f32 payload values in an encoded checkpoint of the built model.
int64_t MeasureForwardMacs(const ArchConfig& config);
int64_t CheckpointPayloadParams(const ArchConfig& config);

struct ComparisonRow {
  std::string variant;
  int64_t params = 0;
  double macs = 0;  // per input frame
  int temporal_rf = 0;
  int spatial_rf = 0;
  int output_t = 0;
};

std::vector<ComparisonRow> CompareVariants(
    const std::vector<ArchConfig>& configs);

std::string FormatComparisonTable(const std::vector<ComparisonRow>& rows);
// Header: variant,params,macs,temporal_rf,spatial_rf,output_t
std::string FormatComparisonCsv(const std::vector<ComparisonRow>& rows);
std::string FormatAnalysisReport(const AnalysisReport& report);

}  // namespace tanet

#endif  // TAN_ANALYSIS_H_
