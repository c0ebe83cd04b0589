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

#include <algorithm>
#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "gemm.h"
#include "tan/diagnostics.h"
#include "tan/ops.h"

namespace tanet {
namespace {

std::atomic<ConvPath> default_path{ConvPath::kGemm};

// One convolution over [T,Cin,H,W] with a [Cout,Cin,kt,kh,kw] kernel.
// Conv2d is kt = 1; temporal conv is kh = kw = 1 with a temporal dilation.
struct ConvGeometry {
  int64_t frames, in_channels, height, width;
  int64_t out_channels, kt, kh, kw;
  int64_t t_dilation, t_pad;
  int64_t stride, pad;
  int64_t out_height, out_width;

  int64_t patch() const { return in_channels * kt * kh * kw; }
  int64_t out_positions() const { return out_height * out_width; }
  int64_t in_positions() const { return height * width; }
  int64_t macs() const {
    return frames * out_positions() * out_channels * patch();
  }
};

template <typename S>
void CheckBias(const Tensor<S>& b, int64_t out_channels, const char* op) {
  if (!b.defined()) return;
  if (b.rank() != 1 || b.dim(0) != out_channels) {
    throw ShapeError(std::string(op) + ": bias shape " +
                     ShapeToString(b.shape()) + " does not match " +
                     std::to_string(out_channels) + " output channels");
  }
}

template <typename S>
void DirectForward(const ConvGeometry& g, const S* x, const S* w, const S* b,
                   S* out) {
  for (int64_t t = 0; t < g.frames; ++t) {
    for (int64_t co = 0; co < g.out_channels; ++co) {
      for (int64_t oy = 0; oy < g.out_height; ++oy) {
        for (int64_t ox = 0; ox < g.out_width; ++ox) {
          S acc = b != nullptr ? b[co] : S(0);
          for (int64_t ci = 0; ci < g.in_channels; ++ci) {
            for (int64_t jt = 0; jt < g.kt; ++jt) {
              const int64_t ti = t + jt * g.t_dilation - g.t_pad;
              if (ti < 0 || ti >= g.frames) continue;
              for (int64_t ky = 0; ky < g.kh; ++ky) {
                const int64_t iy = oy * g.stride + ky - g.pad;
                if (iy < 0 || iy >= g.height) continue;
                for (int64_t kx = 0; kx < g.kw; ++kx) {
                  const int64_t ix = ox * g.stride + kx - g.pad;
                  if (ix < 0 || ix >= g.width) continue;
                  acc += w[(((co * g.in_channels + ci) * g.kt + jt) * g.kh +
                            ky) * g.kw + kx] *
                         x[((ti * g.in_channels + ci) * g.height + iy) *
                               g.width + ix];
                }
              }
            }
          }
          out[((t * g.out_channels + co) * g.out_height + oy) * g.out_width +
              ox] = acc;
        }
      }
    }
  }
}

template <typename S>
void DirectBackward(const ConvGeometry& g, const S* x, const S* w,
                    const S* dout, S* dx, S* dw, S* db) {
  for (int64_t t = 0; t < g.frames; ++t) {
    for (int64_t co = 0; co < g.out_channels; ++co) {
      for (int64_t oy = 0; oy < g.out_height; ++oy) {
        for (int64_t ox = 0; ox < g.out_width; ++ox) {
          const S go = dout[((t * g.out_channels + co) * g.out_height + oy) *
                                g.out_width + ox];
          if (db != nullptr) db[co] += go;
          for (int64_t ci = 0; ci < g.in_channels; ++ci) {
            for (int64_t jt = 0; jt < g.kt; ++jt) {
              const int64_t ti = t + jt * g.t_dilation - g.t_pad;
              if (ti < 0 || ti >= g.frames) continue;
              for (int64_t ky = 0; ky < g.kh; ++ky) {
                const int64_t iy = oy * g.stride + ky - g.pad;
                if (iy < 0 || iy >= g.height) continue;
                for (int64_t kx = 0; kx < g.kw; ++kx) {
                  const int64_t ix = ox * g.stride + kx - g.pad;
                  if (ix < 0 || ix >= g.width) continue;
                  const int64_t wi =
                      (((co * g.in_channels + ci) * g.kt + jt) * g.kh + ky) *
                          g.kw + kx;
                  const int64_t xi =
                      ((ti * g.in_channels + ci) * g.height + iy) * g.width +
                      ix;
                  if (dw != nullptr) dw[wi] += go * x[xi];
                  if (dx != nullptr) dx[xi] += go * w[wi];
                }
              }
            }
          }
        }
      }
    }
  }
}

int64_t FloorDiv(int64_t a, int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

// Column matrix [patch, T*P]: row (ci, jt, ky, kx) holds, for every output
// site (t, oy, ox), the input value under that kernel tap (zero outside).
// Calls fn(image_offset, column_offset, lo, hi): output columns ox in
// [lo, hi) of one output line read image[image_offset + ox * stride].
template <typename Fn>
void VisitTapRuns(const ConvGeometry& g, Fn&& fn) {
  const int64_t sites = g.frames * g.out_positions();
  if (g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0) {
    // Pointwise in space: every tap copies whole planes.
    const int64_t plane = g.height * g.width;
    for (int64_t ci = 0, r = 0; ci < g.in_channels; ++ci) {
      for (int64_t jt = 0; jt < g.kt; ++jt, ++r) {
        for (int64_t t = 0; t < g.frames; ++t) {
          const int64_t ti = t + jt * g.t_dilation - g.t_pad;
          if (ti < 0 || ti >= g.frames) continue;
          fn((ti * g.in_channels + ci) * plane, r * sites + t * plane, 0,
             plane);
        }
      }
    }
    return;
  }
  int64_t r = 0;
  for (int64_t ci = 0; ci < g.in_channels; ++ci) {
    for (int64_t jt = 0; jt < g.kt; ++jt) {
      for (int64_t ky = 0; ky < g.kh; ++ky) {
        for (int64_t kx = 0; kx < g.kw; ++kx, ++r) {
          const int64_t lo = std::clamp<int64_t>(
              FloorDiv(g.pad - kx + g.stride - 1, g.stride), 0, g.out_width);
          const int64_t hi = std::clamp<int64_t>(
              FloorDiv(g.width - 1 + g.pad - kx, g.stride) + 1, lo,
              g.out_width);
          if (lo == hi) continue;
          for (int64_t t = 0; t < g.frames; ++t) {
            const int64_t ti = t + jt * g.t_dilation - g.t_pad;
            if (ti < 0 || ti >= g.frames) continue;
            for (int64_t oy = 0; oy < g.out_height; ++oy) {
              const int64_t iy = oy * g.stride + ky - g.pad;
              if (iy < 0 || iy >= g.height) continue;
              fn(((ti * g.in_channels + ci) * g.height + iy) * g.width + kx -
                     g.pad,
                 r * sites + (t * g.out_height + oy) * g.out_width, lo, hi);
            }
          }
        }
      }
    }
  }
}

template <typename S>
std::vector<S> Columns(const ConvGeometry& g, const S* x) {
  std::vector<S> cols(g.patch() * g.frames * g.out_positions(), S(0));
  const int64_t stride = g.stride;
  VisitTapRuns(g, [&](int64_t in, int64_t col, int64_t lo, int64_t hi) {
    S* dst = cols.data() + col;
    for (int64_t ox = lo; ox < hi; ++ox) dst[ox] = x[in + ox * stride];
  });
  return cols;
}

template <typename S>
void ScatterColumns(const ConvGeometry& g, const std::vector<S>& cols, S* dx) {
  const int64_t stride = g.stride;
  VisitTapRuns(g, [&](int64_t in, int64_t col, int64_t lo, int64_t hi) {
    const S* src = cols.data() + col;
    for (int64_t ox = lo; ox < hi; ++ox) dx[in + ox * stride] += src[ox];
  });
}

// [T, C, P] <-> [C, T*P]
template <typename S>
void FrameMajorToChannelMajor(int64_t frames, int64_t channels,
                              int64_t positions, const S* src, S* dst) {
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t c = 0; c < channels; ++c) {
      std::copy_n(src + (t * channels + c) * positions, positions,
                  dst + (c * frames + t) * positions);
    }
  }
}

template <typename S>
std::vector<S> GemmForward(const ConvGeometry& g, const S* x, const S* w,
                           const S* b, S* out) {
  const int64_t sites = g.frames * g.out_positions();
  const int64_t positions = g.out_positions();
  std::vector<S> cols = Columns(g, x);
  std::vector<S> out_cm(g.out_channels * sites, S(0));
  internal::GemmNN(g.out_channels, sites, g.patch(), w, cols.data(),
                   out_cm.data());
  for (int64_t t = 0; t < g.frames; ++t) {
    for (int64_t co = 0; co < g.out_channels; ++co) {
      const S bias = b != nullptr ? b[co] : S(0);
      const S* src = out_cm.data() + (co * g.frames + t) * positions;
      S* dst = out + (t * g.out_channels + co) * positions;
      for (int64_t p = 0; p < positions; ++p) dst[p] = src[p] + bias;
    }
  }
  return cols;
}

template <typename S>
void GemmBackward(const ConvGeometry& g, const std::vector<S>& cols,
                  const S* w, const S* dout, S* dx, S* dw, S* db) {
  const int64_t sites = g.frames * g.out_positions();
  std::vector<S> dout_cm(g.out_channels * sites);
  FrameMajorToChannelMajor(g.frames, g.out_channels, g.out_positions(), dout,
                           dout_cm.data());
  if (db != nullptr) {
    for (int64_t co = 0; co < g.out_channels; ++co) {
      const S* row = dout_cm.data() + co * sites;
      S acc = 0;
      for (int64_t i = 0; i < sites; ++i) acc += row[i];
      db[co] += acc;
    }
  }
  if (dw != nullptr) {
    internal::GemmNT(g.out_channels, g.patch(), sites, dout_cm.data(),
                     cols.data(), dw);
  }
  if (dx != nullptr) {
    std::vector<S> dcols(g.patch() * sites, S(0));
    internal::GemmTN(g.patch(), sites, g.out_channels, w, dout_cm.data(),
                     dcols.data());
    ScatterColumns(g, dcols, dx);
  }
}

template <typename S>
Tensor<S> RunConv(Tape<S>& tape, const char* op_name, const ConvGeometry& g,
                  const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b,
                  ConvPath path) {
  Tensor<S> out =
      Tensor<S>::Zeros({g.frames, g.out_channels, g.out_height, g.out_width});
  const S* bias = b.defined() ? b.data().data() : nullptr;
  // Columns are kept for the weight gradient instead of being rebuilt.
  auto cols = std::make_shared<std::vector<S>>();
  if (path == ConvPath::kDirect) {
    DirectForward(g, x.data().data(), w.data().data(), bias,
                  out.mutable_data().data());
  } else {
    *cols = GemmForward(g, x.data().data(), w.data().data(), bias,
                        out.mutable_data().data());
  }
  MacCounter::Add(g.macs());

  if (tape.NeedsGrad({&x, &w, &b})) {
    tape.Record(op_name, out, [g, x, w, b, out, path, cols]() mutable {
      if (!out.has_grad()) return;
      S* dx = x.requires_grad() ? x.mutable_grad().data() : nullptr;
      S* dw = w.requires_grad() ? w.mutable_grad().data() : nullptr;
      S* db = b.defined() && b.requires_grad() ? b.mutable_grad().data()
                                               : nullptr;
      if (path == ConvPath::kDirect) {
        DirectBackward(g, x.data().data(), w.data().data(),
                       out.grad().data(), dx, dw, db);
      } else {
        GemmBackward(g, *cols, w.data().data(), out.grad().data(), dx, dw,
                     db);
      }
    });
  }
  return out;
}

template <typename S>
void CheckClip(const Tensor<S>& x, const char* op) {
  if (!x.defined() || x.rank() != 4) {
    throw ShapeError(std::string(op) + ": expected input [T,C,H,W], got " +
                     (x.defined() ? ShapeToString(x.shape()) : "undefined"));
  }
}

}  // namespace

ConvPath DefaultConvPath() { return default_path.load(); }

void SetDefaultConvPath(ConvPath path) { default_path.store(path); }

template <typename S>
Tensor<S> Conv2dPerFrame(Tape<S>& tape, const Tensor<S>& x,
                         const Tensor<S>& w, const Tensor<S>& b, int stride,
                         int pad, ConvPath path) {
  CheckClip(x, "conv2d");
  if (w.rank() != 4) {
    throw ShapeError("conv2d: expected weight [Cout,Cin,kh,kw], got " +
                     ShapeToString(w.shape()));
  }
  if (w.dim(1) != x.dim(1)) {
    throw ShapeError("conv2d: weight expects " + std::to_string(w.dim(1)) +
                     " input channels but input " + ShapeToString(x.shape()) +
                     " has " + std::to_string(x.dim(1)));
  }
  if (w.dim(2) % 2 == 0 || w.dim(3) % 2 == 0) {
    throw ShapeError("conv2d: kernel extents must be odd, got " +
                     ShapeToString(w.shape()));
  }
  if (stride < 1 || pad < 0) {
    throw ShapeError("conv2d: need stride >= 1 and pad >= 0");
  }
  if (x.dim(2) + 2 * pad < w.dim(2) || x.dim(3) + 2 * pad < w.dim(3)) {
    throw ShapeError("conv2d: padded input " + ShapeToString(x.shape()) +
                     " smaller than kernel " + ShapeToString(w.shape()));
  }
  CheckBias(b, w.dim(0), "conv2d");
  ConvGeometry g{};
  g.frames = x.dim(0);
  g.in_channels = x.dim(1);
  g.height = x.dim(2);
  g.width = x.dim(3);
  g.out_channels = w.dim(0);
  g.kt = 1;
  g.kh = w.dim(2);
  g.kw = w.dim(3);
  g.t_dilation = 1;
  g.t_pad = 0;
  g.stride = stride;
  g.pad = pad;
  g.out_height = (g.height + 2 * pad - g.kh) / stride + 1;
  g.out_width = (g.width + 2 * pad - g.kw) / stride + 1;
  return RunConv(tape, "conv2d", g, x, w, b, path);
}

template <typename S>
Tensor<S> Conv1dTemporal(Tape<S>& tape, const Tensor<S>& x,
                         const Tensor<S>& w, const Tensor<S>& b, int dilation,
                         ConvPath path) {
  CheckClip(x, "conv1d_temporal");
  if (w.rank() != 3) {
    throw ShapeError("conv1d_temporal: expected weight [Cout,Cin,k], got " +
                     ShapeToString(w.shape()));
  }
  if (w.dim(1) != x.dim(1)) {
    throw ShapeError("conv1d_temporal: weight expects " +
                     std::to_string(w.dim(1)) + " input channels but input " +
                     ShapeToString(x.shape()) + " has " +
                     std::to_string(x.dim(1)));
  }
  if (w.dim(2) % 2 == 0) {
    throw ShapeError("conv1d_temporal: kernel length must be odd");
  }
  if (dilation < 1) {
    throw ShapeError("conv1d_temporal: dilation must be >= 1");
  }
  CheckBias(b, w.dim(0), "conv1d_temporal");
  const int64_t span = dilation * (w.dim(2) - 1);
  if (span >= 2 * x.dim(0)) {
    EmitWarning("conv1d_temporal: dilated span " + std::to_string(span) +
                " >= 2*T (T=" + std::to_string(x.dim(0)) +
                "); outer taps only ever see padding");
  }
  ConvGeometry g{};
  g.frames = x.dim(0);
  g.in_channels = x.dim(1);
  g.height = x.dim(2);
  g.width = x.dim(3);
  g.out_channels = w.dim(0);
  g.kt = w.dim(2);
  g.kh = 1;
  g.kw = 1;
  g.t_dilation = dilation;
  g.t_pad = span / 2;
  g.stride = 1;
  g.pad = 0;
  g.out_height = g.height;
  g.out_width = g.width;
  return RunConv(tape, "conv1d_temporal", g, x, w, b, path);
}

template <typename S>
Tensor<S> Conv3d(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& w,
                 const Tensor<S>& b, int stride, int pad, ConvPath path) {
  CheckClip(x, "conv3d");
  if (w.rank() != 5) {
    throw ShapeError("conv3d: expected weight [Cout,Cin,kt,kh,kw], got " +
                     ShapeToString(w.shape()));
  }
  if (w.dim(1) != x.dim(1)) {
    throw ShapeError("conv3d: weight expects " + std::to_string(w.dim(1)) +
                     " input channels but input " + ShapeToString(x.shape()) +
                     " has " + std::to_string(x.dim(1)));
  }
  if (w.dim(2) % 2 == 0 || w.dim(3) % 2 == 0 || w.dim(4) % 2 == 0) {
    throw ShapeError("conv3d: kernel extents must be odd, got " +
                     ShapeToString(w.shape()));
  }
  if (stride < 1 || pad < 0) {
    throw ShapeError("conv3d: need stride >= 1 and pad >= 0");
  }
  if (x.dim(2) + 2 * pad < w.dim(3) || x.dim(3) + 2 * pad < w.dim(4)) {
    throw ShapeError("conv3d: padded input " + ShapeToString(x.shape()) +
                     " smaller than kernel " + ShapeToString(w.shape()));
  }
  CheckBias(b, w.dim(0), "conv3d");
  ConvGeometry g{};
  g.frames = x.dim(0);
  g.in_channels = x.dim(1);
  g.height = x.dim(2);
  g.width = x.dim(3);
  g.out_channels = w.dim(0);
  g.kt = w.dim(2);
  g.kh = w.dim(3);
  g.kw = w.dim(4);
  g.t_dilation = 1;
  g.t_pad = (g.kt - 1) / 2;
  g.stride = stride;
  g.pad = pad;
  g.out_height = (g.height + 2 * pad - g.kh) / stride + 1;
  g.out_width = (g.width + 2 * pad - g.kw) / stride + 1;
  return RunConv(tape, "conv3d", g, x, w, b, path);
}

#define TAN_INSTANTIATE_CONV(S)                                              \
  template Tensor<S> Conv2dPerFrame(Tape<S>&, const Tensor<S>&,             \
                                    const Tensor<S>&, const Tensor<S>&, int, \
                                    int, ConvPath);                          \
  template Tensor<S> Conv1dTemporal(Tape<S>&, const Tensor<S>&,             \
                                    const Tensor<S>&, const Tensor<S>&, int, \
                                    ConvPath);                               \
  template Tensor<S> Conv3d(Tape<S>&, const Tensor<S>&, const Tensor<S>&,   \
                            const Tensor<S>&, int, int, ConvPath);

TAN_INSTANTIATE_CONV(float)
TAN_INSTANTIATE_CONV(double)

}  // namespace tanet
