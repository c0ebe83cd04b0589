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
#include <limits>
#include <string>
#include <vector>

#include "gemm.h"
#include "tan/diagnostics.h"
#include "tan/ops.h"

namespace tanet {
namespace {

template <typename S>
void CheckRank(const Tensor<S>& x, int rank, const char* op,
               const char* layout) {
  if (!x.defined() || x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected " + layout + ", got " +
                     (x.defined() ? ShapeToString(x.shape()) : "undefined"));
  }
}

struct PoolGeometry {
  int64_t frames, channels, height, width;
  int64_t kernel, stride, pad;
  int64_t out_height, out_width;
};

PoolGeometry SpatialPoolGeometry(const Shape& shape, int kernel, int stride,
                                 int pad, const char* op) {
  if (kernel < 1 || stride < 1 || pad < 0 || pad >= kernel) {
    throw ShapeError(std::string(op) +
                     ": need kernel >= 1, stride >= 1, 0 <= pad < kernel");
  }
  if (shape[2] + 2 * pad < kernel || shape[3] + 2 * pad < kernel) {
    throw ShapeError(std::string(op) + ": input " + ShapeToString(shape) +
                     " smaller than pooling window " + std::to_string(kernel));
  }
  PoolGeometry g{shape[0], shape[1], shape[2], shape[3], kernel, stride, pad,
                 0,        0};
  g.out_height = (g.height + 2 * pad - kernel) / stride + 1;
  g.out_width = (g.width + 2 * pad - kernel) / stride + 1;
  return g;
}

}  // namespace

template <typename S>
S StableSigmoid(S z) {
  if (z >= 0) return S(1) / (S(1) + std::exp(-z));
  const S e = std::exp(z);
  return e / (S(1) + e);
}

template <typename S>
Tensor<S> MaxPool2dPerFrame(Tape<S>& tape, const Tensor<S>& x, int kernel,
                            int stride, int pad) {
  CheckRank(x, 4, "maxpool2d", "[T,C,H,W]");
  const PoolGeometry g =
      SpatialPoolGeometry(x.shape(), kernel, stride, pad, "maxpool2d");
  Tensor<S> out =
      Tensor<S>::Zeros({g.frames, g.channels, g.out_height, g.out_width});
  std::vector<int64_t> argmax(out.numel());
  const S* in = x.data().data();
  S* dst = out.mutable_data().data();
  int64_t o = 0;
  for (int64_t plane = 0; plane < g.frames * g.channels; ++plane) {
    const S* src = in + plane * g.height * g.width;
    for (int64_t oy = 0; oy < g.out_height; ++oy) {
      for (int64_t ox = 0; ox < g.out_width; ++ox, ++o) {
        S best = -std::numeric_limits<S>::infinity();
        int64_t best_index = -1;
        for (int64_t ky = 0; ky < kernel; ++ky) {
          const int64_t iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= g.height) continue;
          for (int64_t kx = 0; kx < kernel; ++kx) {
            const int64_t ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= g.width) continue;
            const S v = src[iy * g.width + ix];
            if (best_index < 0 || v > best) {
              best = v;
              best_index = plane * g.height * g.width + iy * g.width + ix;
            }
          }
        }
        dst[o] = best;
        argmax[o] = best_index;
      }
    }
  }
  if (tape.NeedsGrad({&x})) {
    tape.Record("maxpool2d", out,
                [x, out, argmax = std::move(argmax)]() mutable {
                  if (!out.has_grad()) return;
                  auto dx = x.mutable_grad();
                  auto dout = out.grad();
                  for (size_t i = 0; i < argmax.size(); ++i) {
                    dx[argmax[i]] += dout[i];
                  }
                });
  }
  return out;
}

template <typename S>
Tensor<S> AvgPool2dPerFrame(Tape<S>& tape, const Tensor<S>& x, int kernel,
                            int stride, int pad) {
  CheckRank(x, 4, "avgpool2d", "[T,C,H,W]");
  const PoolGeometry g =
      SpatialPoolGeometry(x.shape(), kernel, stride, pad, "avgpool2d");
  Tensor<S> out =
      Tensor<S>::Zeros({g.frames, g.channels, g.out_height, g.out_width});
  const S scale = S(1) / S(kernel * kernel);
  auto visit = [g, kernel, stride, pad](auto&& fn) {
    int64_t o = 0;
    for (int64_t plane = 0; plane < g.frames * g.channels; ++plane) {
      for (int64_t oy = 0; oy < g.out_height; ++oy) {
        for (int64_t ox = 0; ox < g.out_width; ++ox, ++o) {
          for (int64_t ky = 0; ky < kernel; ++ky) {
            const int64_t iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= g.height) continue;
            for (int64_t kx = 0; kx < kernel; ++kx) {
              const int64_t ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= g.width) continue;
              fn(o, plane * g.height * g.width + iy * g.width + ix);
            }
          }
        }
      }
    }
  };
  {
    auto src = x.data();
    auto dst = out.mutable_data();
    visit([&](int64_t o, int64_t i) { dst[o] += src[i] * scale; });
  }
  if (tape.NeedsGrad({&x})) {
    tape.Record("avgpool2d", out, [x, out, visit, scale]() mutable {
      if (!out.has_grad()) return;
      auto dx = x.mutable_grad();
      auto dout = out.grad();
      visit([&](int64_t o, int64_t i) { dx[i] += dout[o] * scale; });
    });
  }
  return out;
}

namespace {

template <typename S>
void CheckTemporalPool(const Tensor<S>& x, int kernel, int stride,
                       const char* op) {
  CheckRank(x, 4, op, "[T,C,H,W]");
  if (kernel < 1 || stride < 1) {
    throw ShapeError(std::string(op) + ": need kernel >= 1 and stride >= 1");
  }
  if (x.dim(0) < kernel) {
    throw ShapeError(std::string(op) + ": " + std::to_string(x.dim(0)) +
                     " frames is shorter than the pooling window " +
                     std::to_string(kernel));
  }
}

}  // namespace

template <typename S>
Tensor<S> MaxPoolTemporal(Tape<S>& tape, const Tensor<S>& x, int kernel,
                          int stride) {
  CheckTemporalPool(x, kernel, stride, "maxpool_temporal");
  const int64_t frames = x.dim(0);
  const int64_t site_count = x.numel() / frames;
  const int64_t out_frames = (frames - kernel) / stride + 1;
  Shape shape = x.shape();
  shape[0] = out_frames;
  Tensor<S> out = Tensor<S>::Zeros(shape);
  std::vector<int64_t> argmax(out.numel());
  auto src = x.data();
  auto dst = out.mutable_data();
  for (int64_t t = 0; t < out_frames; ++t) {
    for (int64_t s = 0; s < site_count; ++s) {
      int64_t best = (t * stride) * site_count + s;
      for (int64_t j = 1; j < kernel; ++j) {
        const int64_t i = (t * stride + j) * site_count + s;
        if (src[i] > src[best]) best = i;
      }
      dst[t * site_count + s] = src[best];
      argmax[t * site_count + s] = best;
    }
  }
  if (tape.NeedsGrad({&x})) {
    tape.Record("maxpool_temporal", out,
                [x, out, argmax = std::move(argmax)]() mutable {
                  if (!out.has_grad()) return;
                  auto dx = x.mutable_grad();
                  auto dout = out.grad();
                  for (size_t i = 0; i < argmax.size(); ++i) {
                    dx[argmax[i]] += dout[i];
                  }
                });
  }
  return out;
}

template <typename S>
Tensor<S> AvgPoolTemporal(Tape<S>& tape, const Tensor<S>& x, int kernel,
                          int stride) {
  CheckTemporalPool(x, kernel, stride, "avgpool_temporal");
  const int64_t frames = x.dim(0);
  const int64_t site_count = x.numel() / frames;
  const int64_t out_frames = (frames - kernel) / stride + 1;
  Shape shape = x.shape();
  shape[0] = out_frames;
  Tensor<S> out = Tensor<S>::Zeros(shape);
  const S scale = S(1) / S(kernel);
  auto src = x.data();
  auto dst = out.mutable_data();
  for (int64_t t = 0; t < out_frames; ++t) {
    for (int64_t j = 0; j < kernel; ++j) {
      const S* row = src.data() + (t * stride + j) * site_count;
      S* o = dst.data() + t * site_count;
      for (int64_t s = 0; s < site_count; ++s) o[s] += row[s] * scale;
    }
  }
  if (tape.NeedsGrad({&x})) {
    tape.Record("avgpool_temporal", out,
                [x, out, kernel, stride, site_count, out_frames,
                 scale]() mutable {
                  if (!out.has_grad()) return;
                  auto dx = x.mutable_grad();
                  auto dout = out.grad();
                  for (int64_t t = 0; t < out_frames; ++t) {
                    for (int64_t j = 0; j < kernel; ++j) {
                      S* row = dx.data() + (t * stride + j) * site_count;
                      const S* g = dout.data() + t * site_count;
                      for (int64_t s = 0; s < site_count; ++s) {
                        row[s] += g[s] * scale;
                      }
                    }
                  }
                });
  }
  return out;
}

template <typename S>
Tensor<S> Add(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& y) {
  if (x.shape() != y.shape()) {
    throw ShapeError("add: shapes " + ShapeToString(x.shape()) + " and " +
                     ShapeToString(y.shape()) + " differ");
  }
  Tensor<S> out = Tensor<S>::Zeros(x.shape());
  auto a = x.data();
  auto b = y.data();
  auto o = out.mutable_data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b[i];
  if (tape.NeedsGrad({&x, &y})) {
    tape.Record("add", out, [x, y, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (x.requires_grad()) {
        auto dx = x.mutable_grad();
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      }
      if (y.requires_grad()) {
        auto dy = y.mutable_grad();
        for (size_t i = 0; i < g.size(); ++i) dy[i] += g[i];
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> Mul(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& y) {
  if (x.shape() != y.shape()) {
    throw ShapeError("mul: shapes " + ShapeToString(x.shape()) + " and " +
                     ShapeToString(y.shape()) + " differ");
  }
  Tensor<S> out = Tensor<S>::Zeros(x.shape());
  auto a = x.data();
  auto b = y.data();
  auto o = out.mutable_data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
  if (tape.NeedsGrad({&x, &y})) {
    tape.Record("mul", out, [x, y, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (x.requires_grad()) {
        auto dx = x.mutable_grad();
        auto b = y.data();
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * b[i];
      }
      if (y.requires_grad()) {
        auto dy = y.mutable_grad();
        auto a = x.data();
        for (size_t i = 0; i < g.size(); ++i) dy[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> Relu(Tape<S>& tape, const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::Zeros(x.shape());
  auto a = x.data();
  auto o = out.mutable_data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] > S(0) ? a[i] : S(0);
  if (tape.NeedsGrad({&x})) {
    tape.Record("relu", out, [x, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto a = x.data();
      auto dx = x.mutable_grad();
      for (size_t i = 0; i < g.size(); ++i) {
        if (a[i] > S(0)) dx[i] += g[i];
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> Sigmoid(Tape<S>& tape, const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::Zeros(x.shape());
  auto a = x.data();
  auto o = out.mutable_data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = StableSigmoid(a[i]);
  if (tape.NeedsGrad({&x})) {
    tape.Record("sigmoid", out, [x, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto s = out.data();
      auto dx = x.mutable_grad();
      for (size_t i = 0; i < g.size(); ++i) {
        dx[i] += g[i] * s[i] * (S(1) - s[i]);
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> SpatialAvgPool(Tape<S>& tape, const Tensor<S>& x) {
  CheckRank(x, 4, "spatial_avgpool", "[T,C,H,W]");
  const int64_t planes = x.dim(0) * x.dim(1);
  const int64_t area = x.dim(2) * x.dim(3);
  Tensor<S> out = Tensor<S>::Zeros({x.dim(0), x.dim(1)});
  auto a = x.data();
  auto o = out.mutable_data();
  for (int64_t p = 0; p < planes; ++p) {
    S acc = 0;
    for (int64_t i = 0; i < area; ++i) acc += a[p * area + i];
    o[p] = acc / S(area);
  }
  if (tape.NeedsGrad({&x})) {
    tape.Record("spatial_avgpool", out, [x, out, planes, area]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto dx = x.mutable_grad();
      for (int64_t p = 0; p < planes; ++p) {
        const S share = g[p] / S(area);
        for (int64_t i = 0; i < area; ++i) dx[p * area + i] += share;
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> Linear(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& w,
                 const Tensor<S>& b) {
  CheckRank(x, 2, "linear", "[T,C]");
  CheckRank(w, 2, "linear", "weight [K,C]");
  if (w.dim(1) != x.dim(1)) {
    throw ShapeError("linear: weight " + ShapeToString(w.shape()) +
                     " does not match input " + ShapeToString(x.shape()));
  }
  const int64_t rows = x.dim(0);
  const int64_t in = x.dim(1);
  const int64_t classes = w.dim(0);
  if (b.defined() && (b.rank() != 1 || b.dim(0) != classes)) {
    throw ShapeError("linear: bias " + ShapeToString(b.shape()) +
                     " does not match weight " + ShapeToString(w.shape()));
  }
  Tensor<S> out = Tensor<S>::Zeros({rows, classes});
  internal::GemmNT(rows, classes, in, x.data().data(), w.data().data(),
                   out.mutable_data().data());
  if (b.defined()) {
    auto o = out.mutable_data();
    auto bias = b.data();
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t k = 0; k < classes; ++k) o[r * classes + k] += bias[k];
    }
  }
  MacCounter::Add(rows * classes * in);
  if (tape.NeedsGrad({&x, &w, &b})) {
    tape.Record("linear", out, [x, w, b, out, rows, in, classes]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (x.requires_grad()) {
        internal::GemmNN(rows, in, classes, g.data(), w.data().data(),
                         x.mutable_grad().data());
      }
      if (w.requires_grad()) {
        internal::GemmTN(classes, in, rows, g.data(), x.data().data(),
                         w.mutable_grad().data());
      }
      if (b.defined() && b.requires_grad()) {
        auto db = b.mutable_grad();
        for (int64_t r = 0; r < rows; ++r) {
          for (int64_t k = 0; k < classes; ++k) db[k] += g[r * classes + k];
        }
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> Sum(Tape<S>& tape, const Tensor<S>& x) {
  S acc = 0;
  for (S v : x.data()) acc += v;
  Tensor<S> out = Tensor<S>::Scalar(acc);
  if (tape.NeedsGrad({&x})) {
    tape.Record("sum", out, [x, out]() mutable {
      if (!out.has_grad()) return;
      const S g = out.grad()[0];
      for (S& d : x.mutable_grad()) d += g;
    });
  }
  return out;
}

template <typename S>
Tensor<S> RepeatFrames(Tape<S>& tape, const Tensor<S>& x, int factor) {
  if (factor < 1) throw ShapeError("repeat_frames: factor must be >= 1");
  const int64_t frames = x.dim(0);
  const int64_t slice = x.numel() / frames;
  Shape shape = x.shape();
  shape[0] = frames * factor;
  Tensor<S> out = Tensor<S>::Zeros(shape);
  auto src = x.data();
  auto dst = out.mutable_data();
  for (int64_t t = 0; t < frames * factor; ++t) {
    std::copy_n(src.data() + (t / factor) * slice, slice,
                dst.data() + t * slice);
  }
  if (tape.NeedsGrad({&x})) {
    tape.Record("repeat_frames", out,
                [x, out, frames, factor, slice]() mutable {
                  if (!out.has_grad()) return;
                  auto g = out.grad();
                  auto dx = x.mutable_grad();
                  for (int64_t t = 0; t < frames * factor; ++t) {
                    for (int64_t i = 0; i < slice; ++i) {
                      dx[(t / factor) * slice + i] += g[t * slice + i];
                    }
                  }
                });
  }
  return out;
}

#define TAN_INSTANTIATE_OPS(S)                                                \
  template S StableSigmoid(S);                                               \
  template Tensor<S> MaxPool2dPerFrame(Tape<S>&, const Tensor<S>&, int, int, \
                                       int);                                  \
  template Tensor<S> AvgPool2dPerFrame(Tape<S>&, const Tensor<S>&, int, int, \
                                       int);                                  \
  template Tensor<S> MaxPoolTemporal(Tape<S>&, const Tensor<S>&, int, int);  \
  template Tensor<S> AvgPoolTemporal(Tape<S>&, const Tensor<S>&, int, int);  \
  template Tensor<S> Add(Tape<S>&, const Tensor<S>&, const Tensor<S>&);      \
  template Tensor<S> Mul(Tape<S>&, const Tensor<S>&, const Tensor<S>&);      \
  template Tensor<S> Relu(Tape<S>&, const Tensor<S>&);                       \
  template Tensor<S> Sigmoid(Tape<S>&, const Tensor<S>&);                    \
  template Tensor<S> SpatialAvgPool(Tape<S>&, const Tensor<S>&);             \
  template Tensor<S> Linear(Tape<S>&, const Tensor<S>&, const Tensor<S>&,    \
                            const Tensor<S>&);                                \
  template Tensor<S> Sum(Tape<S>&, const Tensor<S>&);                        \
  template Tensor<S> RepeatFrames(Tape<S>&, const Tensor<S>&, int);

TAN_INSTANTIATE_OPS(float)
TAN_INSTANTIATE_OPS(double)

}  // namespace tanet
