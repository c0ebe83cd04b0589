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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tan/data.h"
#include "tan/diagnostics.h"
#include "tan/errors.h"

namespace tanet {
namespace {

namespace fs = std::filesystem;

GeneratorConfig Small(int videos = 20) {
  GeneratorConfig c;
  c.num_videos = videos;
  return c;
}

float ChannelSpread(const Video& v, int t, int64_t pixel) {
  const int64_t plane = v.clip.dim(2) * v.clip.dim(3);
  const float* f = v.clip.data().data() + t * 3 * plane;
  const float a = f[pixel], b = f[plane + pixel], c = f[2 * plane + pixel];
  return std::max({a, b, c}) - std::min({a, b, c});
}

float MaxSpread(const Video& v, int t) {
  float spread = 0;
  for (int64_t p = 0; p < v.clip.dim(2) * v.clip.dim(3); ++p) {
    spread = std::max(spread, ChannelSpread(v, t, p));
  }
  return spread;
}

TEST(GenerateTest, SameSeedGivesIdenticalBytes) {
  const Dataset a = Generate(Small()), b = Generate(Small());
  ASSERT_EQ(a.videos.size(), b.videos.size());
  for (size_t i = 0; i < a.videos.size(); ++i) {
    EXPECT_TRUE(std::equal(a.videos[i].clip.data().begin(),
                           a.videos[i].clip.data().end(),
                           b.videos[i].clip.data().begin()));
  }
  EXPECT_EQ(DatasetDigest(a), DatasetDigest(b));
  GeneratorConfig other = Small();
  other.seed = 8;
  EXPECT_NE(DatasetDigest(a), DatasetDigest(Generate(other)));
  // Video i depends on (seed, i) only.
  EXPECT_EQ(DatasetDigest(Dataset{8, {GenerateVideo(Small(), 5)}}),
            DatasetDigest(Dataset{8, {a.videos[5]}}));
}

TEST(GenerateTest, LabelsAreTheOrOfEventSpans) {
  const Dataset d = Generate(Small(100));
  for (const Video& v : d.videos) {
    EXPECT_GE(v.events.size(), 1u);
    EXPECT_LE(v.events.size(), 4u);
    std::vector<float> expected(v.labels.numel(), 0);
    for (const Event& e : v.events) {
      ASSERT_GE(e.onset, 0);
      ASSERT_LE(e.onset + e.duration, v.frames());
      for (int t = e.onset; t < e.onset + e.duration; ++t) {
        expected[t * d.num_classes + e.class_id] = 1;
      }
    }
    EXPECT_EQ(std::vector<float>(v.labels.data().begin(),
                                 v.labels.data().end()),
              expected);
    for (float x : v.clip.data()) {
      ASSERT_GE(x, 0);
      ASSERT_LE(x, 1);
    }
  }
}

TEST(GenerateTest, EventCountFollowsItsDistribution) {
  const Dataset d = Generate(Small(2000));
  std::vector<int> histogram(5, 0);
  for (const Video& v : d.videos) ++histogram[v.events.size()];
  for (int n = 1; n <= 4; ++n) {
    EXPECT_NEAR(histogram[n] / 2000.0, n / 10.0, 0.03) << n;
  }
}

TEST(GenerateTest, LabelDensityBands) {
  GeneratorConfig c = Small(100);
  c.num_classes = 4;
  const double k4 = Generate(c).MeanActiveLabelsPerFrame();
  EXPECT_GE(k4, 1.0);
  EXPECT_LE(k4, 2.0);
  for (uint64_t seed : {7u, 1007u, 3u}) {
    GeneratorConfig d = Small(200);
    d.seed = seed;
    const double density = Generate(d).MeanActiveLabelsPerFrame();
    EXPECT_GE(density, 1.2) << seed;
    EXPECT_LE(density, 2.0) << seed;
  }
}

TEST(GenerateTest, LongAndShortRunLengthsDifferByAtLeastThree) {
  const Dataset d = Generate(Small(200));
  const auto classes = DefaultEventClasses(d.num_classes);
  for (const EventClass& l : classes) {
    if (!l.is_long()) continue;
    for (const EventClass& s : classes) {
      if (!s.is_short()) continue;
      EXPECT_GE(d.MeanRunLength(l.id), 3 * d.MeanRunLength(s.id))
          << l.id << " vs " << s.id;
    }
  }
}

TEST(GenerateTest, LongEventsShowColourOnlyAtTheirEnds) {
  const Dataset d = Generate(Small(300));
  const auto classes = DefaultEventClasses(d.num_classes);
  int checked = 0;
  for (const Video& v : d.videos) {
    if (v.events.size() != 1 || !classes[v.events[0].class_id].is_long()) {
      continue;
    }
    const Event& e = v.events[0];
    for (int i = 0; i < e.duration; ++i) {
      const bool marker = i < kMarkerFrames || i >= e.duration - kMarkerFrames;
      if (marker) {
        EXPECT_GT(MaxSpread(v, e.onset + i), 0.5f);
      } else {
        EXPECT_LE(MaxSpread(v, e.onset + i), 0.08f + 1e-6f);
      }
    }
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST(GenerateTest, ForcedEmptyVideosHaveNoLabels) {
  GeneratorConfig c = Small(10);
  c.zero_event_prob = 1;
  for (const Video& v : Generate(c).videos) {
    EXPECT_TRUE(v.events.empty());
    for (float x : v.labels.data()) EXPECT_EQ(x, 0);
  }
}

TEST(GenerateTest, InvalidConfigsNameTheField) {
  auto message = [](GeneratorConfig c) {
    try {
      Generate(c);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  GeneratorConfig c = Small();
  c.temporal_len = 8;
  EXPECT_NE(message(c).find("temporal_len"), std::string::npos);
  c = Small();
  c.num_classes = 0;
  EXPECT_NE(message(c).find("num_classes"), std::string::npos);
  c = Small();
  c.zero_event_prob = 2;
  EXPECT_NE(message(c).find("zero_event_prob"), std::string::npos);
}

TEST(ResampleTest, IdentityAndShapes) {
  const Video v = GenerateVideo(Small(), 3);
  const Video same = ResampleRate(v, 1);
  EXPECT_TRUE(std::equal(v.clip.data().begin(), v.clip.data().end(),
                         same.clip.data().begin()));
  EXPECT_TRUE(std::equal(v.labels.data().begin(), v.labels.data().end(),
                         same.labels.data().begin()));
  const Video quarter = ResampleRate(v, 4);
  EXPECT_EQ(quarter.clip.shape(), (Shape{4, 3, 32, 32}));
  EXPECT_EQ(quarter.labels.shape(), (Shape{4, 8}));
  EXPECT_THROW(ResampleRate(v, 3), ConfigError);
  EXPECT_THROW(ResampleRate(v, 0), ConfigError);
}

TEST(ResampleTest, OrPoolingNeverDeletesAnEvent) {
  // Every placement of a single event in 16 frames at every dividing factor.
  for (int factor : {1, 2, 4, 8, 16}) {
    for (int onset = 0; onset < 16; ++onset) {
      for (int duration = 1; onset + duration <= 16; ++duration) {
        Video v;
        v.id = "x";
        v.clip = Tensor<float>::Zeros({16, 3, 1, 1});
        v.labels = Tensor<float>::Zeros({16, 1});
        for (int t = onset; t < onset + duration; ++t) {
          v.labels.mutable_data()[t] = 1;
        }
        const Video r = ResampleRate(v, factor);
        int kept = 0;
        for (int t = 0; t < 16 / factor; ++t) {
          bool any = false;
          for (int i = 0; i < factor; ++i) any |= v.label(t * factor + i, 0);
          EXPECT_EQ(r.label(t, 0), any);
          kept += r.label(t, 0);
        }
        EXPECT_GE(kept, 1);
        EXPECT_LE(kept, duration);
      }
    }
  }
}

TEST(ResampleTest, KeepsEveryFactorthFrame) {
  const Video v = GenerateVideo(Small(), 1);
  const Video r = ResampleRate(v, 2);
  const int64_t plane = 3 * 32 * 32;
  for (int t = 0; t < 8; ++t) {
    EXPECT_TRUE(std::equal(r.clip.data().begin() + t * plane,
                           r.clip.data().begin() + (t + 1) * plane,
                           v.clip.data().begin() + 2 * t * plane));
  }
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tan_data_test_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void WriteText(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
  }

  // A solid-colour video of `frames` 8x6 PPM frames.
  void MakeVideo(const std::string& id, int frames) {
    fs::create_directories(dir_ / "frames" / id);
    for (int t = 0; t < frames; ++t) {
      Image image{8, 6, std::vector<uint8_t>(8 * 6 * 3, 0)};
      for (size_t i = 0; i < image.rgb.size(); i += 3) {
        image.rgb[i] = static_cast<uint8_t>(10 * t);
      }
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%05d.ppm", t);
      WritePpm(dir_ / "frames" / id / name, image);
    }
  }

  std::string IngestError(const std::string& manifest, int classes = 4) {
    WriteText(dir_ / "m.csv", manifest);
    try {
      Ingest(dir_ / "frames", dir_ / "m.csv", {classes, 4});
    } catch (const IoError& e) {
      return e.what();
    }
    return "";
  }

  fs::path dir_;
};

const char* kHeader = "video_id,start_frame,end_frame,class_id\n";

TEST_F(TempDir, IngestDensifiesIntervals) {
  MakeVideo("a", 16);
  MakeVideo("b", 10);
  WriteText(dir_ / "m.csv", std::string("# comment\n") + kHeader +
                                "a,0,15,2\n"
                                "a,3,5,1\n"
                                "a,4,8,3\n");
  std::vector<std::string> warnings;
  ScopedWarningHandler capture(
      [&](const std::string& w) { warnings.push_back(w); });
  const Dataset d = Ingest(dir_ / "frames", dir_ / "m.csv", {4, 4});
  ASSERT_EQ(d.videos.size(), 2u);
  const Video& a = d.videos[0];
  EXPECT_EQ(a.clip.shape(), (Shape{16, 3, 4, 4}));
  for (int t = 0; t < 16; ++t) {
    EXPECT_TRUE(a.label(t, 2));
    EXPECT_EQ(a.label(t, 1), t >= 3 && t <= 5);
    EXPECT_EQ(a.label(t, 3), t >= 4 && t <= 8);
    EXPECT_FALSE(a.label(t, 0));
  }
  EXPECT_TRUE(a.label(4, 1) && a.label(4, 3));
  // Frame t was painted with red 10t; a constant image resizes exactly.
  EXPECT_FLOAT_EQ(a.clip.at({7, 0, 2, 1}), 70 / 255.0f);
  EXPECT_FLOAT_EQ(a.clip.at({7, 1, 2, 1}), 0);
  for (float x : d.videos[1].labels.data()) EXPECT_EQ(x, 0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("'b'"), std::string::npos);
}

TEST_F(TempDir, IngestErrorsCarryFileAndLine) {
  MakeVideo("a", 16);
  EXPECT_NE(IngestError(std::string(kHeader) + "a,0,3,1\na,0,3\n")
                .find("m.csv:3:"),
            std::string::npos);
  EXPECT_NE(IngestError(std::string(kHeader) + "a,0,x,1\n").find("m.csv:2:"),
            std::string::npos);
  EXPECT_NE(IngestError(std::string(kHeader) + "a,0,3,4\n").find("class_id 4"),
            std::string::npos);
  EXPECT_NE(IngestError(std::string(kHeader) + "a,0,16,1\n").find("m.csv:2:"),
            std::string::npos);
  EXPECT_NE(IngestError(std::string(kHeader) + "\nzz,0,1,1\n")
                .find("m.csv:3:"),
            std::string::npos);
  EXPECT_NE(IngestError("a,0,3,1\n").find("header"), std::string::npos);
  EXPECT_NE(IngestError(std::string(kHeader) + "a,5,3,1\n").find("interval"),
            std::string::npos);
}

TEST_F(TempDir, IngestReportsMissingFrames) {
  MakeVideo("a", 6);
  fs::remove(dir_ / "frames" / "a" / "frame_00003.ppm");
  EXPECT_NE(IngestError(kHeader).find("missing frame 3"), std::string::npos);
  fs::create_directories(dir_ / "frames" / "empty");
  fs::remove_all(dir_ / "frames" / "a");
  EXPECT_NE(IngestError(kHeader).find("no .ppm frames"), std::string::npos);
}

TEST_F(TempDir, PpmRoundTripAndHeaderComments) {
  Image image{3, 2, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12,
                     13, 14, 15, 16, 17, 18}};
  WritePpm(dir_ / "x.ppm", image);
  EXPECT_EQ(ReadPpm(dir_ / "x.ppm").rgb, image.rgb);
  std::string raw = "P6\n# made by hand\n3 2\n255\n";
  raw.append(image.rgb.begin(), image.rgb.end());
  std::ofstream(dir_ / "y.ppm", std::ios::binary) << raw;
  const Image y = ReadPpm(dir_ / "y.ppm");
  EXPECT_EQ(y.width, 3);
  EXPECT_EQ(y.rgb, image.rgb);
  std::ofstream(dir_ / "z.ppm", std::ios::binary) << "P6\n3 2\n255\n\x01\x02";
  EXPECT_THROW(ReadPpm(dir_ / "z.ppm"), IoError);
  std::ofstream(dir_ / "w.ppm", std::ios::binary) << "P3\n1 1\n255\n0 0 0";
  EXPECT_THROW(ReadPpm(dir_ / "w.ppm"), IoError);
}

TEST(ResizeTest, BilinearHandValues) {
  // Red channel 0 and 255 side by side; 2 -> 4 with half-pixel centres
  // samples at source x = -0.25, 0.25, 0.75, 1.25 (clamped).
  Image image{2, 1, {0, 0, 0, 255, 0, 0}};
  const std::vector<float> out = ResizeBilinear(image, 4);
  const std::vector<float> row = {0, 0.25f, 0.75f, 1};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      EXPECT_FLOAT_EQ(out[y * 4 + x], row[x]);
      EXPECT_FLOAT_EQ(out[16 + y * 4 + x], 0);
    }
  }
  Image same{2, 2, {0, 50, 100, 150, 200, 250, 10, 20, 30, 40, 50, 60}};
  const std::vector<float> copy = ResizeBilinear(same, 2);
  EXPECT_FLOAT_EQ(copy[0], 0);
  EXPECT_FLOAT_EQ(copy[1], 150 / 255.0f);
  EXPECT_FLOAT_EQ(copy[4 + 3], 50 / 255.0f);
}

TEST_F(TempDir, DatasetSaveLoadRoundTrip) {
  GeneratorConfig c = Small(12);
  c.zero_event_prob = 0.2;
  const Dataset d = Generate(c);
  SaveDataset(d, dir_ / "ds", "seed=7");
  const Dataset back = LoadDataset(dir_ / "ds");
  EXPECT_EQ(back.num_classes, d.num_classes);
  EXPECT_EQ(DatasetDigest(back), DatasetDigest(d));
  std::ifstream in(dir_ / "ds" / "manifest.csv");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "# seed=7");

  std::ofstream(dir_ / "ds" / "manifest.csv", std::ios::app) << "v00000,0,0,0\n";
  const Video& v0 = d.videos[0];
  if (!v0.label(0, 0)) {
    EXPECT_THROW(LoadDataset(dir_ / "ds"), IoError);
  }
}

TEST_F(TempDir, SavedDatasetsAreByteIdentical) {
  const Dataset d = Generate(Small(5));
  SaveDataset(d, dir_ / "one");
  SaveDataset(Generate(Small(5)), dir_ / "two");
  for (const auto& entry : fs::recursive_directory_iterator(dir_ / "one")) {
    if (!entry.is_regular_file()) continue;
    const fs::path other = dir_ / "two" / fs::relative(entry.path(),
                                                       dir_ / "one");
    std::ifstream a(entry.path(), std::ios::binary), b(other, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb) << entry.path();
  }
}

}  // namespace
}  // namespace tanet
