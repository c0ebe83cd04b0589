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
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "tan/checkpoint.h"
#include "tan/data.h"
#include "tan/diagnostics.h"
#include "tan/errors.h"

namespace tanet {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestHeader = "video_id,start_frame,end_frame,class_id";

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> Split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, sep)) fields.push_back(Trim(field));
  if (!line.empty() && line.back() == sep) fields.push_back("");
  return fields;
}

bool ParseInt(const std::string& s, int& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void Fail(const fs::path& path, int line,
                       const std::string& what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + what);
}

int SkipPpmSpace(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  return c;
}

int ReadPpmNumber(std::istream& in, const fs::path& path) {
  int c = SkipPpmSpace(in);
  if (c == EOF || !std::isdigit(c)) {
    throw IoError(path.string() + ": malformed PPM header");
  }
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1 << 20) throw IoError(path.string() + ": PPM size too big");
    c = in.get();
  }
  in.unget();
  return value;
}

// Trailing decimal digits of a file stem, or -1.
int FrameNumber(const fs::path& file) {
  const std::string stem = file.stem().string();
  size_t i = stem.size();
  while (i > 0 && std::isdigit(static_cast<unsigned char>(stem[i - 1]))) --i;
  int n = -1;
  if (i < stem.size() && !ParseInt(stem.substr(i), n)) return -1;
  return n;
}

Tensor<float> Densify(const std::vector<const LabelInterval*>& intervals,
                      int frames, int num_classes) {
  Tensor<float> labels = Tensor<float>::Zeros({frames, num_classes});
  for (const LabelInterval* r : intervals) {
    for (int t = r->start; t <= r->end; ++t) {
      labels.mutable_data()[t * num_classes + r->class_id] = 1;
    }
  }
  return labels;
}

}  // namespace

std::vector<LabelInterval> ReadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<LabelInterval> out;
  std::string raw;
  int line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = Trim(raw);
    if (text.empty() || text[0] == '#') continue;
    if (!header) {
      if (text != kManifestHeader) {
        Fail(path, line, std::string("expected header '") + kManifestHeader +
                             "', got '" + text + "'");
      }
      header = true;
      continue;
    }
    const std::vector<std::string> f = Split(text, ',');
    if (f.size() != 4) {
      Fail(path, line, "expected 4 fields, got " + std::to_string(f.size()));
    }
    LabelInterval r;
    r.video_id = f[0];
    r.line = line;
    if (r.video_id.empty()) Fail(path, line, "empty video_id");
    if (!ParseInt(f[1], r.start) || !ParseInt(f[2], r.end) ||
        !ParseInt(f[3], r.class_id)) {
      Fail(path, line, "non-integer frame or class field");
    }
    if (r.start < 0 || r.end < r.start) {
      Fail(path, line, "bad interval [" + f[1] + "," + f[2] + "]");
    }
    if (r.class_id < 0) Fail(path, line, "negative class_id");
    out.push_back(r);
  }
  if (!header) Fail(path, line, "missing header line");
  return out;
}

void WriteManifest(const fs::path& path,
                   const std::vector<LabelInterval>& intervals,
                   const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << "\n";
  out << kManifestHeader << "\n";
  for (const LabelInterval& r : intervals) {
    out << r.video_id << ',' << r.start << ',' << r.end << ',' << r.class_id
        << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<LabelInterval> LabelRuns(const Video& video) {
  std::vector<LabelInterval> runs;
  const int K = static_cast<int>(video.labels.dim(1));
  for (int k = 0; k < K; ++k) {
    int start = -1;
    for (int t = 0; t <= video.frames(); ++t) {
      const bool on = t < video.frames() && video.label(t, k);
      if (on && start < 0) start = t;
      if (!on && start >= 0) {
        runs.push_back({video.id, start, t - 1, k, 0});
        start = -1;
      }
    }
  }
  std::stable_sort(runs.begin(), runs.end(),
                   [](const LabelInterval& a, const LabelInterval& b) {
                     return a.start < b.start;
                   });
  return runs;
}

Image ReadPpm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open frame " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '6') {
    throw IoError(path.string() + ": not a binary PPM (P6)");
  }
  Image image;
  image.width = ReadPpmNumber(in, path);
  image.height = ReadPpmNumber(in, path);
  const int maxval = ReadPpmNumber(in, path);
  if (maxval != 255) {
    throw IoError(path.string() + ": only 8-bit PPM is supported");
  }
  if (image.width < 1 || image.height < 1) {
    throw IoError(path.string() + ": empty image");
  }
  in.get();  // single whitespace before the raster
  image.rgb.resize(static_cast<size_t>(image.width) * image.height * 3);
  in.read(reinterpret_cast<char*>(image.rgb.data()),
          static_cast<std::streamsize>(image.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.rgb.size())) {
    throw IoError(path.string() + ": truncated raster");
  }
  return image;
}

void WritePpm(const fs::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Image FrameToImage(const Tensor<float>& clip, int t) {
  const int h = static_cast<int>(clip.dim(2)), w = static_cast<int>(clip.dim(3));
  Image image{w, h, std::vector<uint8_t>(static_cast<size_t>(w) * h * 3)};
  const float* frame = clip.data().data() + static_cast<int64_t>(t) * 3 * h * w;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < h * w; ++i) {
      const float v = std::clamp(frame[c * h * w + i], 0.0f, 1.0f);
      image.rgb[i * 3 + c] = static_cast<uint8_t>(std::lround(v * 255));
    }
  }
  return image;
}

std::vector<float> ResizeBilinear(const Image& image, int size) {
  std::vector<float> out(static_cast<size_t>(3) * size * size);
  const double sy = static_cast<double>(image.height) / size;
  const double sx = static_cast<double>(image.width) / size;
  auto pixel = [&](int y, int x, int c) {
    return image.rgb[(static_cast<size_t>(y) * image.width + x) * 3 + c] /
           255.0;
  };
  for (int oy = 0; oy < size; ++oy) {
    const double fy =
        std::clamp((oy + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < size; ++ox) {
      const double fx =
          std::clamp((ox + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = pixel(y0, x0, c) * (1 - wx) + pixel(y0, x1, c) * wx;
        const double bottom =
            pixel(y1, x0, c) * (1 - wx) + pixel(y1, x1, c) * wx;
        out[(static_cast<size_t>(c) * size + oy) * size + ox] =
            static_cast<float>(top * (1 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

Dataset Ingest(const fs::path& root, const fs::path& manifest,
               const IngestOptions& options) {
  if (options.num_classes < 1) {
    throw ConfigError("num_classes: must be >= 1");
  }
  if (options.spatial < 1) throw ConfigError("spatial: must be >= 1");
  if (!fs::is_directory(root)) {
    throw IoError("dataset root " + root.string() + " is not a directory");
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  const std::vector<LabelInterval> intervals = ReadManifest(manifest);
  std::map<std::string, std::vector<const LabelInterval*>> by_video;
  for (const LabelInterval& r : intervals) by_video[r.video_id].push_back(&r);
  for (const auto& [id, rows] : by_video) {
    if (!fs::is_directory(root / id)) {
      Fail(manifest, rows.front()->line,
           "video '" + id + "' has no frame directory under " + root.string());
    }
  }

  Dataset dataset;
  dataset.num_classes = options.num_classes;
  for (const fs::path& dir : dirs) {
    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
        frames.push_back(entry.path());
      }
    }
    std::sort(frames.begin(), frames.end());
    if (frames.empty()) {
      throw IoError(dir.string() + ": no .ppm frames");
    }
    for (size_t i = 1; i < frames.size(); ++i) {
      const int prev = FrameNumber(frames[i - 1]), cur = FrameNumber(frames[i]);
      if (prev >= 0 && cur >= 0 && cur != prev + 1) {
        throw IoError(dir.string() + ": missing frame " +
                      std::to_string(prev + 1) + " (next present is " +
                      frames[i].filename().string() + ")");
      }
    }

    Video video;
    video.id = dir.filename().string();
    const int T = static_cast<int>(frames.size());
    const int S = options.spatial;
    video.clip = Tensor<float>::Zeros({T, 3, S, S});
    for (int t = 0; t < T; ++t) {
      const std::vector<float> plane = ResizeBilinear(ReadPpm(frames[t]), S);
      std::copy(plane.begin(), plane.end(),
                video.clip.mutable_data().begin() + t * 3 * S * S);
    }

    std::vector<const LabelInterval*> rows;
    for (const LabelInterval* r : by_video[video.id]) {
      if (r->end >= T) {
        Fail(manifest, r->line,
             "end_frame " + std::to_string(r->end) + " beyond video '" +
                 video.id + "' of " + std::to_string(T) + " frames");
      }
      if (r->class_id >= options.num_classes) {
        Fail(manifest, r->line,
             "class_id " + std::to_string(r->class_id) + " >= K=" +
                 std::to_string(options.num_classes));
      }
      rows.push_back(r);
    }
    if (rows.empty()) {
      EmitWarning("video '" + video.id +
                  "' has no manifest intervals; labels are all zero");
    }
    video.labels = Densify(rows, T, options.num_classes);
    dataset.videos.push_back(std::move(video));
  }
  return dataset;
}

void SaveDataset(const Dataset& dataset, const fs::path& dir,
                 const std::string& comment) {
  std::error_code ec;
  fs::create_directories(dir / "videos", ec);
  if (ec) throw IoError("cannot create " + (dir / "videos").string());
  std::vector<LabelInterval> intervals;
  for (const Video& v : dataset.videos) {
    WriteTensorFile(dir / "videos" / (v.id + ".tnsr"),
                    {{"clip", v.clip}, {"labels", v.labels}});
    for (const LabelInterval& r : LabelRuns(v)) intervals.push_back(r);
  }
  WriteManifest(dir / "manifest.csv", intervals, comment);
}

Dataset LoadDataset(const fs::path& dir) {
  const fs::path videos_dir = dir / "videos";
  if (!fs::is_directory(videos_dir)) {
    throw IoError("no dataset at " + dir.string() + " (missing videos/)");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(videos_dir)) {
    if (entry.path().extension() == ".tnsr") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  Dataset dataset;
  for (const fs::path& file : files) {
    TensorRecords records = ReadTensorFile(file);
    Video video;
    video.id = file.stem().string();
    for (TensorRecord& r : records) {
      if (r.name == "clip") video.clip = r.tensor;
      else if (r.name == "labels") video.labels = r.tensor;
      else throw IoError(file.string() + ": unexpected entry '" + r.name + "'");
    }
    if (records.size() != 2 || video.clip.rank() != 4 ||
        video.labels.rank() != 2 || video.clip.dim(1) != 3 ||
        video.clip.dim(0) != video.labels.dim(0)) {
      throw IoError(file.string() +
                    ": expected clip [T,3,H,W] and labels [T,K]");
    }
    const int K = static_cast<int>(video.labels.dim(1));
    if (dataset.num_classes == 0) dataset.num_classes = K;
    if (K != dataset.num_classes) {
      throw IoError(file.string() + ": " + std::to_string(K) +
                    " classes, other videos have " +
                    std::to_string(dataset.num_classes));
    }
    dataset.videos.push_back(std::move(video));
  }
  if (dataset.videos.empty()) {
    throw IoError("no videos in " + videos_dir.string());
  }

  std::map<std::string, std::vector<const LabelInterval*>> by_video;
  const std::vector<LabelInterval> intervals =
      ReadManifest(dir / "manifest.csv");
  for (const LabelInterval& r : intervals) by_video[r.video_id].push_back(&r);
  for (const Video& v : dataset.videos) {
    const auto rows = by_video[v.id];
    for (const LabelInterval* r : rows) {
      if (r->end >= v.frames() || r->class_id >= dataset.num_classes) {
        throw IoError((dir / "manifest.csv").string() +
                      ": interval out of range for video '" + v.id + "'");
      }
    }
    const Tensor<float> dense = Densify(rows, v.frames(), dataset.num_classes);
    if (!std::equal(dense.data().begin(), dense.data().end(),
                    v.labels.data().begin())) {
      throw IoError((dir / "manifest.csv").string() +
                    ": intervals disagree with labels of video '" + v.id +
                    "'");
    }
    by_video.erase(v.id);
  }
  if (!by_video.empty()) {
    throw IoError((dir / "manifest.csv").string() + ": unknown video '" +
                  by_video.begin()->first + "'");
  }
  return dataset;
}

}  // namespace tanet
