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

#ifndef TAN_TENSOR_H_
#define TAN_TENSOR_H_

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tanet {

using Shape = std::vector<int64_t>;

// Raised for any shape or extent mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string ShapeToString(const Shape& shape);
int64_t NumElements(const Shape& shape);

// Dense row-major tensor with an optional gradient buffer.
//
// Copies share storage: a Tensor is a handle, like a parameter reference in a
// graph. Values are treated as immutable once an op has consumed them; only
// parameter updates (optimizer, loaders) write through mutable_data().
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Filled(Shape shape, S value, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<S> data,
                         bool requires_grad = false);
  static Tensor Scalar(S value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(storage_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(storage_->data.size()); }

  std::span<const S> data() const { return storage_->data; }
  std::span<S> mutable_data() { return storage_->data; }
  S item() const;
  S at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool value) const {
    storage_->requires_grad = value;
  }

  bool has_grad() const { return !storage_->grad.empty(); }
  std::span<const S> grad() const { return storage_->grad; }
  // Gradient buffers are the only state a shared handle may mutate, so these
  // are const. Allocates a zero gradient on first use.
  std::span<S> mutable_grad() const;
  void ZeroGrad() const;
  void DropGrad() const { storage_->grad.clear(); }

  bool AllFinite() const;

  // Fresh storage with identical values and no gradient.
  Tensor Clone() const;

  bool SameStorage(const Tensor& other) const {
    return storage_ == other.storage_;
  }

 private:
  struct Storage {
    Shape shape;
    std::vector<S> data;
    std::vector<S> grad;
    bool requires_grad = false;
  };

  explicit Tensor(std::shared_ptr<Storage> storage)
      : storage_(std::move(storage)) {}

  std::shared_ptr<Storage> storage_;
};

template <typename To, typename From>
Tensor<To> Cast(const Tensor<From>& x) {
  std::vector<To> values(x.data().begin(), x.data().end());
  return Tensor<To>::FromData(x.shape(), std::move(values));
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace tanet

#endif  // TAN_TENSOR_H_
