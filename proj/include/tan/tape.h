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

#ifndef TAN_TAPE_H_
#define TAN_TAPE_H_

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tan/tensor.h"

namespace tanet {

// Misuse of the recorded graph, e.g. a second backward pass.
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Execution-ordered record of differentiable ops.
//
// Each entry owns a backward rule that reads the output gradient and adds
// into the gradients of its inputs. Backward() replays the entries in exact
// reverse order, then the tape is spent until Reset().
template <typename S>
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }

  // True when `output` must be tracked for the given inputs.
  bool NeedsGrad(std::initializer_list<const Tensor<S>*> inputs) const;

  // Marks `output` as requiring grad and appends the backward rule.
  void Record(std::string op_name, Tensor<S>& output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and propagates to every tracked tensor.
  void Backward(Tensor<S>& loss);

  void Reset();

  size_t size() const { return entries_.size(); }
  const std::string& op_name(size_t i) const { return entries_[i].op_name; }

 private:
  struct Entry {
    std::string op_name;
    std::function<void()> backward;
  };

  Mode mode_;
  bool spent_ = false;
  std::vector<Entry> entries_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace tanet

#endif  // TAN_TAPE_H_
