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

#include "tan/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tanet {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ",";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t extent : shape) n *= extent;
  return n;
}

namespace {

void CheckShape(const Shape& shape) {
  for (int64_t extent : shape) {
    if (extent <= 0) {
      throw ShapeError("tensor extents must be positive, got " +
                       ShapeToString(shape));
    }
  }
}

}  // namespace

template <typename S>
Tensor<S> Tensor<S>::Zeros(Shape shape, bool requires_grad) {
  return Filled(std::move(shape), S(0), requires_grad);
}

template <typename S>
Tensor<S> Tensor<S>::Filled(Shape shape, S value, bool requires_grad) {
  CheckShape(shape);
  auto storage = std::make_shared<Storage>();
  storage->data.assign(NumElements(shape), value);
  storage->shape = std::move(shape);
  storage->requires_grad = requires_grad;
  return Tensor(std::move(storage));
}

template <typename S>
Tensor<S> Tensor<S>::FromData(Shape shape, std::vector<S> data,
                              bool requires_grad) {
  CheckShape(shape);
  if (NumElements(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("shape " + ShapeToString(shape) + " needs " +
                     std::to_string(NumElements(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  auto storage = std::make_shared<Storage>();
  storage->shape = std::move(shape);
  storage->data = std::move(data);
  storage->requires_grad = requires_grad;
  return Tensor(std::move(storage));
}

template <typename S>
Tensor<S> Tensor<S>::Scalar(S value, bool requires_grad) {
  return Filled({1}, value, requires_grad);
}

template <typename S>
int64_t Tensor<S>::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     ShapeToString(shape()));
  }
  return storage_->shape[axis];
}

template <typename S>
S Tensor<S>::item() const {
  if (numel() != 1) {
    throw ShapeError("item() needs a single-element tensor, got " +
                     ShapeToString(shape()));
  }
  return storage_->data[0];
}

template <typename S>
S Tensor<S>::at(std::initializer_list<int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw ShapeError("index rank does not match " + ShapeToString(shape()));
  }
  int64_t flat = 0;
  int axis = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= storage_->shape[axis]) {
      throw ShapeError("index out of range for " + ShapeToString(shape()));
    }
    flat = flat * storage_->shape[axis] + i;
    ++axis;
  }
  return storage_->data[flat];
}

template <typename S>
std::span<S> Tensor<S>::mutable_grad() const {
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), 0);
  return storage_->grad;
}

template <typename S>
void Tensor<S>::ZeroGrad() const {
  std::fill(storage_->grad.begin(), storage_->grad.end(), S(0));
}

template <typename S>
bool Tensor<S>::AllFinite() const {
  return std::all_of(storage_->data.begin(), storage_->data.end(),
                     [](S v) { return std::isfinite(v); });
}

template <typename S>
Tensor<S> Tensor<S>::Clone() const {
  return FromData(shape(), storage_->data, false);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace tanet
