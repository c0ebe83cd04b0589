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

#include "tan/tape.h"

namespace tanet {

template <typename S>
bool Tape<S>::NeedsGrad(
    std::initializer_list<const Tensor<S>*> inputs) const {
  if (!recording()) return false;
  for (const Tensor<S>* input : inputs) {
    if (input != nullptr && input->defined() && input->requires_grad()) {
      return true;
    }
  }
  return false;
}

template <typename S>
void Tape<S>::Record(std::string op_name, Tensor<S>& output,
                     std::function<void()> backward) {
  if (spent_) {
    throw GraphError("tape already consumed by backward; call Reset() before "
                     "recording op '" + op_name + "'");
  }
  output.set_requires_grad(true);
  entries_.push_back({std::move(op_name), std::move(backward)});
}

template <typename S>
void Tape<S>::Backward(Tensor<S>& loss) {
  if (spent_) {
    throw GraphError("backward called twice on the same recorded graph");
  }
  if (loss.numel() != 1) {
    throw ShapeError("backward needs a scalar loss, got " +
                     ShapeToString(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw GraphError("loss does not depend on any tensor requiring grad");
  }
  loss.mutable_grad()[0] += S(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->backward();
  }
  spent_ = true;
  // Closures hold references to intermediates; release them now.
  entries_.clear();
}

template <typename S>
void Tape<S>::Reset() {
  entries_.clear();
  spent_ = false;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace tanet
