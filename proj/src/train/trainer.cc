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
#include <limits>
#include <numeric>

#include "tan/errors.h"
#include "tan/random.h"
#include "tan/train.h"

namespace tanet {

namespace {

constexpr uint64_t kShuffleStream = 0x73687566666c65ULL;  // "shuffle"

std::vector<size_t> ShuffledOrder(size_t n, uint64_t seed, int epoch) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, kShuffleStream + static_cast<uint64_t>(epoch));
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.NextInt(0, i - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

void SetPriorBias(Model<float>& model, const Dataset& train) {
  const int K = train.num_classes;
  std::vector<double> positives(K, 0);
  double frames = 0;
  for (const Video& v : train.videos) {
    for (int t = 0; t < v.frames(); ++t) {
      for (int k = 0; k < K; ++k) positives[k] += v.label(t, k);
    }
    frames += v.frames();
  }
  Tensor<float> bias = model.parameter("head/fc/bias");
  for (int k = 0; k < K; ++k) {
    // Clamp keeps never-seen classes finite.
    const double p = std::clamp(positives[k] / frames, 1e-3, 1 - 1e-3);
    bias.mutable_data()[k] = static_cast<float>(std::log(p / (1 - p)));
  }
}

void Report(const TrainOptions& options, const std::string& line) {
  if (options.progress) options.progress(line);
}

}  // namespace

std::string TrainingLog::ToCsv(const std::vector<std::string>& header) const {
  std::string out;
  for (const std::string& line : header) out += "# " + line + "\n";
  out += "epoch,mean_loss,frame_map,video_map\n";
  for (const EpochRecord& r : epochs) {
    out += fmt::format("{},{:.9g},{:.9g},{:.9g}\n", r.epoch, r.mean_loss,
                       r.frame_map, r.video_map);
  }
  return out;
}

TrainingLog Train(Model<float>& model, const Dataset& train,
                  const TrainOptions& options, const Dataset* eval,
                  TrainState* state) {
  if (options.epochs < 0) throw ConfigError("epochs: must be >= 0");
  if (options.accumulate < 1) throw ConfigError("accumulate: must be >= 1");
  options.schedule.Validate();
  TrainingLog log;
  if (options.epochs == 0) return log;
  if (train.videos.empty()) throw ConfigError("train: dataset is empty");
  if (train.num_classes != model.config().num_classes) {
    throw ConfigError("num_classes: dataset has " +
                      std::to_string(train.num_classes) + ", model has " +
                      std::to_string(model.config().num_classes));
  }

  Adam adam(model.parameters(), options.adam);
  const int first_epoch = state ? state->epochs_done : 0;
  if (state && !state->optimizer.empty()) {
    adam.LoadRecords(state->optimizer);
  } else if (options.prior_bias && first_epoch == 0) {
    SetPriorBias(model, train);
  }
  const Dataset& metrics_set = eval ? *eval : train;
  const int last_epoch = first_epoch + options.epochs - 1;

  for (int epoch = first_epoch; epoch <= last_epoch; ++epoch) {
    const double lr = options.schedule.At(epoch);
    const std::vector<size_t> order =
        ShuffledOrder(train.videos.size(), options.seed, epoch);
    double loss_sum = 0;
    int pending = 0;
    model.ZeroGrad();
    for (size_t i = 0; i < order.size(); ++i) {
      const Video& video = train.videos[order[i]];
      Tape<float> tape;
      const Tensor<float> logits = model.ForwardDense(tape, video.clip);
      Tensor<float> loss = BceWithLogits(tape, logits, video.labels);
      const double value = loss.data()[0];
      if (!std::isfinite(value)) {
        throw TrainingError(fmt::format(
            "non-finite loss {} at epoch {}, clip '{}', lr {}", value, epoch,
            video.id, lr));
      }
      loss_sum += value;
      tape.Backward(loss);
      if (++pending == options.accumulate || i + 1 == order.size()) {
        if (pending > 1) {
          const float scale = 1.0f / static_cast<float>(pending);
          for (const auto& p : model.parameters()) {
            if (!p.second.has_grad()) continue;
            for (float& g : p.second.mutable_grad()) g *= scale;
          }
        }
        adam.Step(lr);
        model.ZeroGrad();
        pending = 0;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = loss_sum / static_cast<double>(order.size());
    record.frame_map = record.video_map =
        std::numeric_limits<double>::quiet_NaN();
    const bool due = (options.eval_every >= 0 && epoch == last_epoch) ||
                     (options.eval_every > 0 &&
                      (epoch - first_epoch + 1) % options.eval_every == 0);
    if (due) {
      const MetricReport m = Evaluate(model, metrics_set, options.protocol);
      record.frame_map = m.frame_map;
      record.video_map = m.video_map;
    }
    log.epochs.push_back(record);
    Report(options, fmt::format("epoch {} lr {:g} loss {:.6f} frame_map {:.4f} "
                                "video_map {:.4f}",
                                epoch, lr, record.mean_loss, record.frame_map,
                                record.video_map));
  }
  if (state) {
    state->epochs_done = last_epoch + 1;
    state->optimizer = adam.ToRecords();
  }
  return log;
}

double Median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

std::vector<std::pair<std::string, ArchConfig>> AblationLadder(
    const ArchConfig& base) {
  std::vector<std::pair<std::string, ArchConfig>> ladder;
  const std::vector<std::pair<std::string, std::vector<bool>>> placements = {
      {"ta_l4", {false, false, false, true}},
      {"ta_l34", {false, false, true, true}},
      {"ta_l234", {false, true, true, true}},
      {"ta_l1234", {true, true, true, true}},
  };
  for (const auto& [name, levels] : placements) {
    ArchConfig c = base;
    c.variant = Variant::kTan;
    c.ta_enabled = levels;
    ladder.push_back({name, c});
  }
  ArchConfig plain = base;
  plain.variant = Variant::kTanPlainConv;
  plain.ta_enabled = {true, true, true, true};
  ladder.push_back({"no_dilation", plain});
  return ladder;
}

std::vector<AblationRow> RunAblation(const ArchConfig& base,
                                     const Dataset& train,
                                     const Dataset& test,
                                     const std::vector<uint64_t>& seeds,
                                     const TrainOptions& options) {
  std::vector<AblationRow> rows;
  for (const auto& [name, config] : AblationLadder(base)) {
    AblationRow row;
    row.name = name;
    row.levels = config.ta_enabled;
    row.dilation = config.variant == Variant::kTan;
    for (uint64_t seed : seeds) {
      Model<float> model = Model<float>::Build(config, seed);
      TrainOptions o = options;
      o.seed = seed;
      o.eval_every = -1;
      Train(model, train, o);
      const MetricReport m = Evaluate(model, test, options.protocol);
      row.frame_maps.push_back(m.frame_map);
      row.video_maps.push_back(m.video_map);
      Report(options, fmt::format("ablation {} seed {} frame_map {:.4f} "
                                  "video_map {:.4f}",
                                  name, seed, m.frame_map, m.video_map));
    }
    row.median_frame_map = Median(row.frame_maps);
    row.median_video_map = Median(row.video_maps);
    rows.push_back(row);
  }
  return rows;
}

namespace {

const char* Mark(bool on) { return on ? "x" : "-"; }

}  // namespace

std::string FormatAblationTable(const std::vector<AblationRow>& rows) {
  std::string out =
      fmt::format("{:<12} {:>4} {:>4} {:>4} {:>4} {:>8} {:>10} {:>10}\n",
                  "row", "Lv4", "Lv3", "Lv2", "Lv1", "Dilation", "frame_map",
                  "video_map");
  for (const AblationRow& r : rows) {
    out += fmt::format(
        "{:<12} {:>4} {:>4} {:>4} {:>4} {:>8} {:>10.4f} {:>10.4f}\n", r.name,
        Mark(r.levels[3]), Mark(r.levels[2]), Mark(r.levels[1]),
        Mark(r.levels[0]), Mark(r.dilation), r.median_frame_map,
        r.median_video_map);
  }
  return out;
}

std::string AblationCsv(const std::vector<AblationRow>& rows) {
  std::string out = "row,lv4,lv3,lv2,lv1,dilation,frame_map,video_map\n";
  for (const AblationRow& r : rows) {
    out += fmt::format("{},{:d},{:d},{:d},{:d},{:d},{:.6f},{:.6f}\n", r.name,
                       static_cast<int>(r.levels[3]),
                       static_cast<int>(r.levels[2]),
                       static_cast<int>(r.levels[1]),
                       static_cast<int>(r.levels[0]),
                       static_cast<int>(r.dilation), r.median_frame_map,
                       r.median_video_map);
  }
  return out;
}

}  // namespace tanet
