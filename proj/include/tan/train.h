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

#ifndef TAN_TRAIN_H_
#define TAN_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tan/arch_config.h"
#include "tan/checkpoint.h"
#include "tan/data.h"
#include "tan/model.h"

namespace tanet {

// Mean over all T*K entries of the sigmoid cross-entropy, evaluated as
// max(z,0) - z*y + log1p(exp(-|z|)). Gradient (sigmoid(z) - y) / (T*K).
template <typename S>
Tensor<S> BceWithLogits(Tape<S>& tape, const Tensor<S>& logits,
                        const Tensor<S>& labels);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Piecewise-constant learning rate: the lr of the last pair whose epoch is
// <= the queried epoch.
struct LrSchedule {
  std::vector<std::pair<int, double>> steps = {{0, 1e-3}};

  double At(int epoch) const;
  // base for the first two thirds of `epochs`, base/10 afterwards.
  static LrSchedule StepDecay(double base, int epochs);
  void Validate() const;
};

class Adam {
 public:
  Adam(const std::vector<NamedTensor<float>>& params, AdamHyper hyper = {});

  // Applies one update from the gradients currently held by the parameters.
  // Parameters without a gradient count as zero gradient.
  void Step(double lr);

  int64_t step() const { return step_; }
  const std::vector<std::vector<float>>& first_moments() const { return m_; }
  const std::vector<std::vector<float>>& second_moments() const { return v_; }

  // "optim/step", then "optim/m/<param>" and "optim/v/<param>" per param.
  TensorRecords ToRecords() const;
  // Throws CheckpointError (kMissingName / kShapeConflict / kUnknownName)
  // when the records do not belong to these parameters.
  void LoadRecords(const TensorRecords& records);

 private:
  std::vector<NamedTensor<float>> params_;
  AdamHyper hyper_;
  int64_t step_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation protocol: every frame, or n uniformly spaced frames per video.
struct EvalProtocol {
  bool sampled = false;
  int frames = 25;

  // "dense" or "sampled:<n>" (bare "sampled" means n = 25).
  static EvalProtocol Parse(const std::string& text);
  std::string Name() const;
};

// round(i * (T - 1) / (n - 1)) for i < n; all frames when n >= T.
std::vector<int> SampledFrameIndices(int frames, int n);

// Precision averaged over the ranks of the positives. Scores are sorted
// descending with a stable sort, so ties keep the original order. nullopt
// when there is no positive.
std::optional<double> AveragePrecision(std::span<const double> scores,
                                       std::span<const uint8_t> labels);

struct MetricReport {
  EvalProtocol protocol;
  std::vector<std::optional<double>> frame_ap;  // per class
  std::vector<std::optional<double>> video_ap;
  double frame_map = 0;  // mean over classes with a positive
  double video_map = 0;
  std::vector<int> frame_excluded;  // classes without positives
  std::vector<int> video_excluded;
};

// `frame_scores[i]` is the [T_i, K] probability matrix of video i.
MetricReport EvaluateScores(const std::vector<Tensor<float>>& frame_scores,
                            const Dataset& dataset, EvalProtocol protocol);

// Per-frame sigmoid scores for every video, computed in parallel.
std::vector<Tensor<float>> PredictScores(const Model<float>& model,
                                         const Dataset& dataset);

MetricReport Evaluate(const Model<float>& model, const Dataset& dataset,
                      EvalProtocol protocol);

std::string FormatMetricReport(const MetricReport& report);
std::string MetricReportCsv(const MetricReport& report);

// Mean of the [T,K] scores over frames [first, last], times `actionness`.
Tensor<float> ScoreProposal(const Tensor<float>& frame_scores, int first,
                            int last, double actionness);

struct TrainOptions {
  int epochs = 12;
  uint64_t seed = 0;
  LrSchedule schedule = LrSchedule::StepDecay(1e-3, 12);
  AdamHyper adam;
  // Clips whose gradients are averaged into one update.
  int accumulate = 1;
  // Head bias starts at the logit of each class's training frequency.
  bool prior_bias = true;
  // Metrics are computed every `eval_every` epochs and after the last one;
  // other epochs log NaN. 0 disables evaluation except after the last epoch;
  // a negative value disables it entirely.
  int eval_every = 1;
  EvalProtocol protocol{true, 25};
  std::function<void(const std::string&)> progress;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0;
  double frame_map = 0;
  double video_map = 0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;

  // `epoch,mean_loss,frame_map,video_map` rows, preceded by `header`
  // lines written as `# ...` comments.
  std::string ToCsv(const std::vector<std::string>& header = {}) const;
};

// Resumable state: optimizer moments plus the number of finished epochs.
struct TrainState {
  int epochs_done = 0;
  TensorRecords optimizer;
};

// Trains `model` for options.epochs further epochs on one clip per step.
// Metrics come from `eval` when given, otherwise from `train`. Throws
// TrainingError on a non-finite loss.
TrainingLog Train(Model<float>& model, const Dataset& train,
                  const TrainOptions& options, const Dataset* eval = nullptr,
                  TrainState* state = nullptr);

void SaveTrainState(const TrainState& state, const std::filesystem::path& path);
TrainState LoadTrainState(const std::filesystem::path& path);

// `video_id,frame_idx,class_id,score` rows.
std::string PredictionCsv(const Dataset& dataset,
                          const std::vector<Tensor<float>>& frame_scores);

struct AblationRow {
  std::string name;
  std::vector<bool> levels;  // TA enabled at levels 1..4
  bool dilation = true;
  std::vector<double> frame_maps;  // one per seed
  std::vector<double> video_maps;
  double median_frame_map = 0;
  double median_video_map = 0;
};

// TA at {4}, {3,4}, {2,3,4}, {1,2,3,4}, then all levels without dilation.
std::vector<std::pair<std::string, ArchConfig>> AblationLadder(
    const ArchConfig& base);

std::vector<AblationRow> RunAblation(const ArchConfig& base,
                                     const Dataset& train,
                                     const Dataset& test,
                                     const std::vector<uint64_t>& seeds,
                                     const TrainOptions& options);

// Columns Lv4, Lv3, Lv2, Lv1, Dilation, frame and video mAP.
std::string FormatAblationTable(const std::vector<AblationRow>& rows);
std::string AblationCsv(const std::vector<AblationRow>& rows);

double Median(std::vector<double> values);

}  // namespace tanet

#endif  // TAN_TRAIN_H_
