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

#ifndef TAN_DATA_H_
#define TAN_DATA_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tan/tensor.h"

namespace tanet {

enum class Pattern { kBlink, kDrift, kOscillate };
enum class SpatialExtent { kSmall, kLarge };

std::string PatternName(Pattern pattern);

struct EventClass {
  int id = 0;
  int min_duration = 1;
  int max_duration = 1;
  SpatialExtent extent = SpatialExtent::kSmall;
  Pattern pattern = Pattern::kBlink;

  bool is_short() const { return max_duration <= 3; }
  bool is_long() const { return min_duration >= 10; }
};

// Even ids are short (2-3 frames) and show their colour on every frame. Odd
// ids are long (10-16 frames): the colour appears only on the first and last
// `kMarkerFrames` frames, the frames in between carry a static grey disc
// shared by all long classes, so telling them apart needs temporal context.
std::vector<EventClass> DefaultEventClasses(int num_classes);

inline constexpr int kMarkerFrames = 2;

struct GeneratorConfig {
  uint64_t seed = 7;
  int num_videos = 200;
  int temporal_len = 16;
  int num_classes = 8;
  int spatial = 32;
  // Chance that a video carries no event at all.
  double zero_event_prob = 0.0;
  double noise_amplitude = 0.08;

  // Throws ConfigError naming the field.
  void Validate() const;
};

struct Event {
  int class_id = 0;
  int onset = 0;
  int duration = 0;
  double x = 0, y = 0;    // centre, pixels
  double vx = 0, vy = 0;  // drift, pixels per frame
  double phase = 0;       // oscillation phase
};

struct Video {
  std::string id;
  Tensor<float> clip;    // [T,3,H,W] in [0,1]
  Tensor<float> labels;  // [T,K] of 0/1
  std::vector<Event> events;  // empty for ingested videos

  int frames() const { return static_cast<int>(clip.dim(0)); }
  bool label(int t, int k) const;
};

struct Dataset {
  int num_classes = 0;
  std::vector<Video> videos;

  double MeanActiveLabelsPerFrame() const;
  // Mean length of maximal runs of ones in column k over all videos.
  double MeanRunLength(int class_id) const;
};

// Video i draws from stream (seed, i): event count, then per event class,
// duration, onset, position and motion, then per-pixel noise. Videos are
// independent, so they are generated in parallel.
Dataset Generate(const GeneratorConfig& config);
Video GenerateVideo(const GeneratorConfig& config, int index);

// Keeps frames 0, f, 2f, ...; each kept frame is labelled with the OR of the
// f frames it stands for. Throws ConfigError unless f divides T.
Video ResampleRate(const Video& video, int factor);
Dataset ResampleRate(const Dataset& dataset, int factor);

// 64-bit FNV-1a over the encoded videos in order.
uint64_t DatasetDigest(const Dataset& dataset);

struct LabelInterval {
  std::string video_id;
  int start = 0;
  int end = 0;  // inclusive
  int class_id = 0;
  int line = 0;  // source line when read from a manifest
};

// `video_id,start_frame,end_frame,class_id` with a header line; `#` starts a
// comment. Errors carry "path:line:".
std::vector<LabelInterval> ReadManifest(const std::filesystem::path& path);
void WriteManifest(const std::filesystem::path& path,
                   const std::vector<LabelInterval>& intervals,
                   const std::string& comment = "");
std::vector<LabelInterval> LabelRuns(const Video& video);

struct IngestOptions {
  int num_classes = 8;
  int spatial = 32;
};

// Every subdirectory of `root` is a video; its *.ppm (P6, maxval 255) files
// in name order are the frames, resized bilinearly to spatial x spatial.
Dataset Ingest(const std::filesystem::path& root,
               const std::filesystem::path& manifest,
               const IngestOptions& options);

struct Image {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;  // row-major, interleaved
};

Image ReadPpm(const std::filesystem::path& path);
void WritePpm(const std::filesystem::path& path, const Image& image);
// [3,H,W] plane of `clip` at frame t, rounded to 8 bits.
Image FrameToImage(const Tensor<float>& clip, int t);
// Bilinear with half-pixel centres, output [3,size,size] in [0,1].
std::vector<float> ResizeBilinear(const Image& image, int size);

// <dir>/manifest.csv plus <dir>/videos/<id>.tnsr holding "clip" and
// "labels". Loading checks that the manifest and the label tensors agree.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir,
                 const std::string& comment = "");
Dataset LoadDataset(const std::filesystem::path& dir);

}  // namespace tanet

#endif  // TAN_DATA_H_
