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

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tan/errors.h"
#include "tan/ops.h"
#include "tan/parallel.h"
#include "tan/train.h"

namespace tanet {

EvalProtocol EvalProtocol::Parse(const std::string& text) {
  if (text == "dense") return {false, 0};
  if (text == "sampled") return {true, 25};
  const std::string prefix = "sampled:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string count = text.substr(prefix.size());
    size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(count, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == count.size() && n >= 1) return {true, n};
  }
  throw ConfigError("protocol: expected 'dense' or 'sampled:<n>' with n >= 1, "
                    "got '" + text + "'");
}

std::string EvalProtocol::Name() const {
  return sampled ? "sampled:" + std::to_string(frames) : "dense";
}

std::vector<int> SampledFrameIndices(int frames, int n) {
  std::vector<int> out;
  if (n >= frames) {
    out.resize(frames);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  if (n == 1) return {(frames - 1) / 2};
  for (int i = 0; i < n; ++i) {
    out.push_back(static_cast<int>(
        std::lround(static_cast<double>(i) * (frames - 1) / (n - 1))));
  }
  return out;
}

std::optional<double> AveragePrecision(std::span<const double> scores,
                                       std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("average_precision: " + std::to_string(scores.size()) +
                     " scores vs " + std::to_string(labels.size()) + " labels");
  }
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });
  double sum = 0;
  int64_t hits = 0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

namespace {

double MeanOf(const std::vector<std::optional<double>>& aps,
              std::vector<int>& excluded) {
  double sum = 0;
  int used = 0;
  for (size_t k = 0; k < aps.size(); ++k) {
    if (aps[k]) {
      sum += *aps[k];
      ++used;
    } else {
      excluded.push_back(static_cast<int>(k));
    }
  }
  return used > 0 ? sum / used : 0;
}

}  // namespace

MetricReport EvaluateScores(const std::vector<Tensor<float>>& frame_scores,
                            const Dataset& dataset, EvalProtocol protocol) {
  if (frame_scores.size() != dataset.videos.size()) {
    throw ShapeError("evaluate: " + std::to_string(frame_scores.size()) +
                     " score matrices for " +
                     std::to_string(dataset.videos.size()) + " videos");
  }
  const int K = dataset.num_classes;
  std::vector<std::vector<double>> frame_s(K), video_s(K);
  std::vector<std::vector<uint8_t>> frame_y(K), video_y(K);
  for (size_t v = 0; v < dataset.videos.size(); ++v) {
    const Video& video = dataset.videos[v];
    const Tensor<float>& s = frame_scores[v];
    if (s.shape() != video.labels.shape()) {
      throw ShapeError("evaluate: scores " + ShapeToString(s.shape()) +
                       " vs labels " + ShapeToString(video.labels.shape()) +
                       " for video '" + video.id + "'");
    }
    const int T = video.frames();
    std::vector<int> frames(T);
    std::iota(frames.begin(), frames.end(), 0);
    if (protocol.sampled) frames = SampledFrameIndices(T, protocol.frames);
    const Tensor<float> pooled = VideoScore(s);
    for (int k = 0; k < K; ++k) {
      bool any = false;
      for (int t = 0; t < T; ++t) any |= video.label(t, k);
      for (int t : frames) {
        frame_s[k].push_back(s.data()[t * K + k]);
        frame_y[k].push_back(video.label(t, k));
      }
      video_s[k].push_back(pooled.data()[k]);
      video_y[k].push_back(any);
    }
  }
  MetricReport report;
  report.protocol = protocol;
  for (int k = 0; k < K; ++k) {
    report.frame_ap.push_back(AveragePrecision(frame_s[k], frame_y[k]));
    report.video_ap.push_back(AveragePrecision(video_s[k], video_y[k]));
  }
  report.frame_map = MeanOf(report.frame_ap, report.frame_excluded);
  report.video_map = MeanOf(report.video_ap, report.video_excluded);
  return report;
}

std::vector<Tensor<float>> PredictScores(const Model<float>& model,
                                         const Dataset& dataset) {
  std::vector<Tensor<float>> scores(dataset.videos.size());
  ParallelFor(static_cast<int64_t>(dataset.videos.size()), [&](int64_t i) {
    Tape<float> tape(Tape<float>::Mode::kInference);
    const Tensor<float> logits =
        model.ForwardDense(tape, dataset.videos[i].clip);
    scores[i] = Sigmoid(tape, logits);
  });
  return scores;
}

MetricReport Evaluate(const Model<float>& model, const Dataset& dataset,
                      EvalProtocol protocol) {
  return EvaluateScores(PredictScores(model, dataset), dataset, protocol);
}

namespace {

std::string ApCell(const std::optional<double>& ap) {
  return ap ? fmt::format("{:.6f}", *ap) : "excluded";
}

}  // namespace

std::string FormatMetricReport(const MetricReport& report) {
  std::string out = fmt::format("protocol {}\n{:<6} {:>10} {:>10}\n",
                                report.protocol.Name(), "class", "frame_ap",
                                "video_ap");
  for (size_t k = 0; k < report.frame_ap.size(); ++k) {
    out += fmt::format("{:<6} {:>10} {:>10}\n", k, ApCell(report.frame_ap[k]),
                       ApCell(report.video_ap[k]));
  }
  out += fmt::format("frame_map {:.6f}\nvideo_map {:.6f}\n", report.frame_map,
                     report.video_map);
  return out;
}

std::string MetricReportCsv(const MetricReport& report) {
  std::string out = "class,frame_ap,video_ap\n";
  for (size_t k = 0; k < report.frame_ap.size(); ++k) {
    out += fmt::format("{},{},{}\n", k, ApCell(report.frame_ap[k]),
                       ApCell(report.video_ap[k]));
  }
  out += fmt::format("mean,{:.9f},{:.9f}\n", report.frame_map,
                     report.video_map);
  return out;
}

Tensor<float> ScoreProposal(const Tensor<float>& frame_scores, int first,
                            int last, double actionness) {
  if (frame_scores.rank() != 2) {
    throw ShapeError("score_proposal: expected [T,K] scores, got " +
                     ShapeToString(frame_scores.shape()));
  }
  if (first < 0 || last < first || last >= frame_scores.dim(0)) {
    throw ConfigError("score_proposal: interval [" + std::to_string(first) +
                      "," + std::to_string(last) + "] invalid for T=" +
                      std::to_string(frame_scores.dim(0)));
  }
  if (!(actionness >= 0 && actionness <= 1)) {
    throw ConfigError("score_proposal: actionness must lie in [0, 1]");
  }
  Tensor<float> out = MeanOverFrames(frame_scores, first, last);
  const float scale = static_cast<float>(actionness);
  for (float& v : out.mutable_data()) v *= scale;
  return out;
}

std::string PredictionCsv(const Dataset& dataset,
                          const std::vector<Tensor<float>>& frame_scores) {
  std::string out = "video_id,frame_idx,class_id,score\n";
  for (size_t v = 0; v < dataset.videos.size(); ++v) {
    const Tensor<float>& s = frame_scores[v];
    const int64_t K = s.dim(1);
    for (int64_t t = 0; t < s.dim(0); ++t) {
      for (int64_t k = 0; k < K; ++k) {
        out += fmt::format("{},{},{},{:.9g}\n", dataset.videos[v].id, t, k,
                           s.data()[t * K + k]);
      }
    }
  }
  return out;
}

}  // namespace tanet
