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

#include <cmath>
#include <map>
#include <string>

#include "tan/errors.h"
#include "tan/ops.h"
#include "tan/train.h"

namespace tanet {

template <typename S>
Tensor<S> BceWithLogits(Tape<S>& tape, const Tensor<S>& logits,
                        const Tensor<S>& labels) {
  if (logits.shape() != labels.shape()) {
    throw ShapeError("bce: logits " + ShapeToString(logits.shape()) +
                     " vs labels " + ShapeToString(labels.shape()));
  }
  auto z = logits.data();
  auto y = labels.data();
  double total = 0;
  for (size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    total += std::max(zi, 0.0) - zi * y[i] + std::log1p(std::exp(-std::abs(zi)));
  }
  const double n = static_cast<double>(z.size());
  Tensor<S> out = Tensor<S>::Scalar(static_cast<S>(total / n));
  if (tape.NeedsGrad({&logits})) {
    tape.Record("bce", out, [logits, labels, out, n]() mutable {
      if (!out.has_grad()) return;
      const S g = out.grad()[0];
      auto z = logits.data();
      auto y = labels.data();
      auto dz = logits.mutable_grad();
      for (size_t i = 0; i < z.size(); ++i) {
        dz[i] += g * static_cast<S>((StableSigmoid(z[i]) - y[i]) / n);
      }
    });
  }
  return out;
}

template Tensor<float> BceWithLogits(Tape<float>&, const Tensor<float>&,
                                     const Tensor<float>&);
template Tensor<double> BceWithLogits(Tape<double>&, const Tensor<double>&,
                                      const Tensor<double>&);

double LrSchedule::At(int epoch) const {
  double lr = steps.front().second;
  for (const auto& [start, value] : steps) {
    if (start <= epoch) lr = value;
  }
  return lr;
}

LrSchedule LrSchedule::StepDecay(double base, int epochs) {
  LrSchedule s;
  s.steps = {{0, base}};
  const int drop = static_cast<int>(std::lround(2.0 * epochs / 3.0));
  if (drop > 0 && drop < epochs) s.steps.push_back({drop, base / 10});
  return s;
}

void LrSchedule::Validate() const {
  if (steps.empty()) throw ConfigError("lr_schedule: must not be empty");
  for (size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i].second > 0) || !std::isfinite(steps[i].second)) {
      throw ConfigError("lr_schedule: learning rates must be positive");
    }
    if (i > 0 && steps[i].first <= steps[i - 1].first) {
      throw ConfigError("lr_schedule: epochs must be strictly increasing");
    }
  }
  if (steps.front().first != 0) {
    throw ConfigError("lr_schedule: first entry must start at epoch 0");
  }
}

Adam::Adam(const std::vector<NamedTensor<float>>& params, AdamHyper hyper)
    : params_(params), hyper_(hyper) {
  for (const auto& p : params_) {
    m_.emplace_back(p.second.numel(), 0.0f);
    v_.emplace_back(p.second.numel(), 0.0f);
  }
}

void Adam::Step(double lr) {
  ++step_;
  const double c1 = 1 - std::pow(hyper_.beta1, static_cast<double>(step_));
  const double c2 = 1 - std::pow(hyper_.beta2, static_cast<double>(step_));
  const double b1 = hyper_.beta1, b2 = hyper_.beta2, eps = hyper_.eps;
  for (size_t p = 0; p < params_.size(); ++p) {
    Tensor<float> param = params_[p].second;
    if (!param.has_grad()) continue;
    const float* __restrict g = param.grad().data();
    float* __restrict w = param.mutable_data().data();
    float* __restrict m = m_[p].data();
    float* __restrict v = v_[p].data();
    const int64_t n = param.numel();
#pragma omp simd
    for (int64_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1 - b1) * gi;
      const double vi = b2 * v[i] + (1 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      w[i] -= static_cast<float>(lr * (mi / c1) / (std::sqrt(vi / c2) + eps));
    }
  }
}

TensorRecords Adam::ToRecords() const {
  TensorRecords records;
  // Split into two exact f32 halves so large step counts survive.
  const float hi = static_cast<float>(step_ >> 20);
  const float lo = static_cast<float>(step_ & ((1 << 20) - 1));
  records.push_back({"optim/step", Tensor<float>::FromData({2}, {hi, lo})});
  for (size_t p = 0; p < params_.size(); ++p) {
    const Shape& shape = params_[p].second.shape();
    records.push_back(
        {"optim/m/" + params_[p].first, Tensor<float>::FromData(shape, m_[p])});
    records.push_back(
        {"optim/v/" + params_[p].first, Tensor<float>::FromData(shape, v_[p])});
  }
  return records;
}

void Adam::LoadRecords(const TensorRecords& records) {
  using Kind = CheckpointError::Kind;
  std::map<std::string, const Tensor<float>*> by_name;
  for (const TensorRecord& r : records) by_name[r.name] = &r.tensor;
  auto take = [&](const std::string& name, const Shape& shape) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw CheckpointError(Kind::kMissingName,
                            "optimizer state lacks '" + name + "'");
    }
    if (it->second->shape() != shape) {
      throw CheckpointError(Kind::kShapeConflict,
                            "optimizer entry '" + name + "' has shape " +
                                ShapeToString(it->second->shape()) +
                                ", expected " + ShapeToString(shape));
    }
    const Tensor<float>* t = it->second;
    by_name.erase(it);
    return std::vector<float>(t->data().begin(), t->data().end());
  };
  const std::vector<float> step = take("optim/step", {2});
  std::vector<std::vector<float>> m, v;
  for (const auto& p : params_) {
    m.push_back(take("optim/m/" + p.first, p.second.shape()));
    v.push_back(take("optim/v/" + p.first, p.second.shape()));
  }
  if (!by_name.empty()) {
    throw CheckpointError(Kind::kUnknownName, "optimizer state has unknown '" +
                                                  by_name.begin()->first + "'");
  }
  step_ = (static_cast<int64_t>(step[0]) << 20) + static_cast<int64_t>(step[1]);
  m_ = std::move(m);
  v_ = std::move(v);
}

void SaveTrainState(const TrainState& state,
                    const std::filesystem::path& path) {
  TensorRecords records = state.optimizer;
  records.insert(records.begin(),
                 {"train/epochs_done",
                  Tensor<float>::FromData(
                      {1}, {static_cast<float>(state.epochs_done)})});
  WriteTensorFile(path, records);
}

TrainState LoadTrainState(const std::filesystem::path& path) {
  TensorRecords records = ReadTensorFile(path);
  TrainState state;
  bool found = false;
  for (auto it = records.begin(); it != records.end(); ++it) {
    if (it->name == "train/epochs_done" && it->tensor.numel() == 1) {
      state.epochs_done = static_cast<int>(it->tensor.data()[0]);
      records.erase(it);
      found = true;
      break;
    }
  }
  if (!found) {
    throw CheckpointError(CheckpointError::Kind::kMissingName,
                          path.string() + ": no 'train/epochs_done' entry");
  }
  state.optimizer = std::move(records);
  return state;
}

}  // namespace tanet
