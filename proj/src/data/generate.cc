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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tan/checkpoint.h"
#include "tan/data.h"
#include "tan/errors.h"
#include "tan/parallel.h"
#include "tan/random.h"

namespace tanet {

namespace {

constexpr float kGrey = 0.55f;
constexpr float kBackground = 0.1f;
constexpr int kLongestMinDuration = 10;

struct Rgb {
  float r, g, b;
};

// Fully saturated hue wheel, one slot per class.
Rgb ClassColour(int id, int num_classes) {
  const double h = 6.0 * id / num_classes;
  const int sector = static_cast<int>(h) % 6;
  const float f = static_cast<float>(h - std::floor(h));
  const float v = 0.95f, q = v * (1 - f), t = v * f;
  switch (sector) {
    case 0: return {v, t, 0};
    case 1: return {q, v, 0};
    case 2: return {0, v, t};
    case 3: return {0, q, v};
    case 4: return {t, 0, v};
    default: return {v, 0, q};
  }
}

double Radius(SpatialExtent extent, int spatial) {
  return (extent == SpatialExtent::kSmall ? 3.0 : 6.0) * spatial / 32.0;
}

int EventCount(CounterRng& rng) {
  // P(n) = n / 10 for n = 1..4.
  const double u = rng.NextUniform() * 10;
  if (u < 1) return 1;
  if (u < 3) return 2;
  if (u < 6) return 3;
  return 4;
}

void PaintDisc(Tensor<float>& clip, int t, double cx, double cy, double r,
               Rgb colour) {
  const int64_t h = clip.dim(2), w = clip.dim(3);
  float* frame = clip.mutable_data().data() + t * 3 * h * w;
  const int y0 = std::max<int>(0, static_cast<int>(std::floor(cy - r)));
  const int y1 = std::min<int>(h - 1, static_cast<int>(std::ceil(cy + r)));
  const int x0 = std::max<int>(0, static_cast<int>(std::floor(cx - r)));
  const int x1 = std::min<int>(w - 1, static_cast<int>(std::ceil(cx + r)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy > r * r) continue;
      frame[y * w + x] = colour.r;
      frame[(h + y) * w + x] = colour.g;
      frame[(2 * h + y) * w + x] = colour.b;
    }
  }
}

void RenderEvent(const Event& e, const EventClass& cls, int num_classes,
                 Tensor<float>& clip) {
  const int spatial = static_cast<int>(clip.dim(2));
  const double r = Radius(cls.extent, spatial);
  const Rgb colour = ClassColour(cls.id, num_classes);
  for (int i = 0; i < e.duration; ++i) {
    const bool marker = cls.is_short() || i < kMarkerFrames ||
                        i >= e.duration - kMarkerFrames;
    if (!marker) {
      // Same static placeholder for every long class.
      const double placeholder = 4.5 * spatial / 32.0;
      PaintDisc(clip, e.onset + i, std::clamp(e.x, placeholder, spatial - placeholder),
                std::clamp(e.y, placeholder, spatial - placeholder), placeholder,
                {kGrey, kGrey, kGrey});
      continue;
    }
    double cx = e.x, cy = e.y;
    float gain = 1;
    switch (cls.pattern) {
      case Pattern::kBlink:
        gain = i % 2 == 0 ? 1.0f : 0.6f;
        break;
      case Pattern::kDrift:
        cx += e.vx * i;
        cy += e.vy * i;
        break;
      case Pattern::kOscillate:
        cx += r * std::sin(std::numbers::pi / 2 * i + e.phase);
        break;
    }
    cx = std::clamp(cx, r, spatial - r);
    cy = std::clamp(cy, r, spatial - r);
    PaintDisc(clip, e.onset + i, cx, cy, r,
              {colour.r * gain, colour.g * gain, colour.b * gain});
  }
}

}  // namespace

std::string PatternName(Pattern pattern) {
  switch (pattern) {
    case Pattern::kBlink: return "blink";
    case Pattern::kDrift: return "drift";
    case Pattern::kOscillate: return "oscillate";
  }
  return "?";
}

std::vector<EventClass> DefaultEventClasses(int num_classes) {
  std::vector<EventClass> classes;
  for (int k = 0; k < num_classes; ++k) {
    EventClass c;
    c.id = k;
    if (k % 2 == 0) {
      c.min_duration = 2;
      c.max_duration = 3;
    } else {
      c.min_duration = kLongestMinDuration;
      c.max_duration = 16;
    }
    c.extent = (k / 2) % 2 == 0 ? SpatialExtent::kSmall : SpatialExtent::kLarge;
    c.pattern = static_cast<Pattern>((k / 2) % 3);
    classes.push_back(c);
  }
  return classes;
}

void GeneratorConfig::Validate() const {
  if (num_classes < 4) {
    throw ConfigError("num_classes: must be >= 4 (short and long classes), "
                      "got " + std::to_string(num_classes));
  }
  if (num_videos < 1) {
    throw ConfigError("num_videos: must be >= 1, got " +
                      std::to_string(num_videos));
  }
  if (temporal_len < kLongestMinDuration) {
    throw ConfigError("temporal_len: must be >= " +
                      std::to_string(kLongestMinDuration) +
                      " (longest class minimum duration), got " +
                      std::to_string(temporal_len));
  }
  if (spatial < 16) {
    throw ConfigError("spatial: must be >= 16, got " + std::to_string(spatial));
  }
  if (!(zero_event_prob >= 0 && zero_event_prob <= 1)) {
    throw ConfigError("zero_event_prob: must lie in [0, 1]");
  }
  if (!(noise_amplitude >= 0 && noise_amplitude <= 0.5)) {
    throw ConfigError("noise_amplitude: must lie in [0, 0.5]");
  }
}

bool Video::label(int t, int k) const {
  return labels.data()[static_cast<int64_t>(t) * labels.dim(1) + k] != 0;
}

double Dataset::MeanActiveLabelsPerFrame() const {
  double active = 0, frames = 0;
  for (const Video& v : videos) {
    for (float x : v.labels.data()) active += x;
    frames += v.frames();
  }
  return frames > 0 ? active / frames : 0;
}

double Dataset::MeanRunLength(int class_id) const {
  double total = 0;
  int runs = 0;
  for (const Video& v : videos) {
    int length = 0;
    for (int t = 0; t <= v.frames(); ++t) {
      if (t < v.frames() && v.label(t, class_id)) {
        ++length;
      } else if (length > 0) {
        total += length;
        ++runs;
        length = 0;
      }
    }
  }
  return runs > 0 ? total / runs : 0;
}

Video GenerateVideo(const GeneratorConfig& config, int index) {
  const int T = config.temporal_len, K = config.num_classes,
            S = config.spatial;
  const std::vector<EventClass> classes = DefaultEventClasses(K);
  CounterRng rng(config.seed, static_cast<uint64_t>(index));

  Video video;
  char id[16];
  std::snprintf(id, sizeof(id), "v%05d", index);
  video.id = id;

  const bool empty = rng.NextUniform() < config.zero_event_prob;
  const int count = EventCount(rng);
  for (int n = 0; n < count; ++n) {
    Event e;
    e.class_id = static_cast<int>(rng.NextInt(0, K - 1));
    const EventClass& cls = classes[e.class_id];
    e.duration = static_cast<int>(
        rng.NextInt(cls.min_duration, std::min(cls.max_duration, T)));
    e.onset = static_cast<int>(rng.NextInt(0, T - e.duration));
    const double r = Radius(cls.extent, S);
    e.x = r + rng.NextUniform() * (S - 2 * r);
    e.y = r + rng.NextUniform() * (S - 2 * r);
    const double angle = rng.NextUniform() * 2 * std::numbers::pi;
    const double speed = 0.5 + 0.5 * rng.NextUniform();
    e.vx = speed * std::cos(angle);
    e.vy = speed * std::sin(angle);
    e.phase = rng.NextUniform() * 2 * std::numbers::pi;
    if (!empty) video.events.push_back(e);
  }

  video.clip = Tensor<float>::Zeros({T, 3, S, S});
  for (float& v : video.clip.mutable_data()) {
    v = kBackground +
        static_cast<float>(config.noise_amplitude * rng.NextUniform());
  }
  // Noise is drawn before painting so the draw sequence does not depend on
  // blob coverage; painted pixels simply overwrite it.
  video.labels = Tensor<float>::Zeros({T, K});
  for (const Event& e : video.events) {
    RenderEvent(e, classes[e.class_id], K, video.clip);
    for (int t = e.onset; t < e.onset + e.duration; ++t) {
      video.labels.mutable_data()[t * K + e.class_id] = 1;
    }
  }
  return video;
}

Dataset Generate(const GeneratorConfig& config) {
  config.Validate();
  Dataset dataset;
  dataset.num_classes = config.num_classes;
  dataset.videos.resize(config.num_videos);
  ParallelFor(config.num_videos, [&](int64_t i) {
    dataset.videos[i] = GenerateVideo(config, static_cast<int>(i));
  });
  return dataset;
}

Video ResampleRate(const Video& video, int factor) {
  const int T = video.frames();
  if (factor < 1 || T % factor != 0) {
    throw ConfigError("resample factor: " + std::to_string(factor) +
                      " does not divide T=" + std::to_string(T));
  }
  const int64_t K = video.labels.dim(1), plane = video.clip.numel() / T;
  const int out_t = T / factor;
  Video out;
  out.id = video.id;
  out.clip = Tensor<float>::Zeros(
      {out_t, video.clip.dim(1), video.clip.dim(2), video.clip.dim(3)});
  out.labels = Tensor<float>::Zeros({out_t, K});
  auto src = video.clip.data();
  auto dst = out.clip.mutable_data();
  for (int t = 0; t < out_t; ++t) {
    std::copy_n(src.begin() + t * factor * plane, plane,
                dst.begin() + t * plane);
    for (int i = 0; i < factor; ++i) {
      for (int64_t k = 0; k < K; ++k) {
        if (video.label(t * factor + i, static_cast<int>(k))) {
          out.labels.mutable_data()[t * K + k] = 1;
        }
      }
    }
  }
  for (Event e : video.events) {
    const int first = e.onset / factor;
    const int last = (e.onset + e.duration - 1) / factor;
    e.onset = first;
    e.duration = last - first + 1;
    out.events.push_back(e);
  }
  return out;
}

Dataset ResampleRate(const Dataset& dataset, int factor) {
  Dataset out;
  out.num_classes = dataset.num_classes;
  for (const Video& v : dataset.videos) {
    out.videos.push_back(ResampleRate(v, factor));
  }
  return out;
}

uint64_t DatasetDigest(const Dataset& dataset) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Video& v : dataset.videos) {
    feed(v.id);
    feed(EncodeTensorRecords({{"clip", v.clip}, {"labels", v.labels}}));
  }
  return h;
}

}  // namespace tanet
