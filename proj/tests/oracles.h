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

#ifndef TAN_TESTS_ORACLES_H_
#define TAN_TESTS_ORACLES_H_

// Reference implementations used only by tests. They are written from the
// operator definitions with plain nested loops and share no code with the
// library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "tan/tape.h"
#include "tan/tensor.h"

namespace oracle {

using tanet::Tensor;

inline std::vector<double> RandomValues(std::mt19937_64& gen, int64_t n,
                                        double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

// Distinct values spaced at least `gap` apart, in random order. Keeps relu
// kinks and max-pool ties away from finite-difference probes.
inline std::vector<double> SeparatedValues(std::mt19937_64& gen, int64_t n,
                                           double gap = 0.01) {
  std::vector<double> v(n);
  for (int64_t i = 0; i < n; ++i) {
    v[i] = (static_cast<double>(i) - n / 2.0) * gap + gap / 2;
  }
  std::shuffle(v.begin(), v.end(), gen);
  return v;
}

// out[t][co][oy][ox] = b[co] + sum w[co][ci][jt][ky][kx] *
//   x[t + jt*dt - pt][ci][oy*s + ky - p][ox*s + kx - p]
inline std::vector<double> Conv(const std::vector<double>& x, int64_t frames,
                                int64_t cin, int64_t h, int64_t w_in,
                                const std::vector<double>& w, int64_t cout,
                                int64_t kt, int64_t kh, int64_t kw,
                                const std::vector<double>* bias, int64_t stride,
                                int64_t pad, int64_t t_dilation, int64_t t_pad,
                                int64_t* out_h, int64_t* out_w) {
  const int64_t oh = (h + 2 * pad - kh) / stride + 1;
  const int64_t ow = (w_in + 2 * pad - kw) / stride + 1;
  *out_h = oh;
  *out_w = ow;
  std::vector<double> out(frames * cout * oh * ow, 0.0);
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          double acc = bias ? (*bias)[co] : 0.0;
          for (int64_t ci = 0; ci < cin; ++ci)
            for (int64_t jt = 0; jt < kt; ++jt)
              for (int64_t ky = 0; ky < kh; ++ky)
                for (int64_t kx = 0; kx < kw; ++kx) {
                  const int64_t ti = t + jt * t_dilation - t_pad;
                  const int64_t iy = oy * stride + ky - pad;
                  const int64_t ix = ox * stride + kx - pad;
                  if (ti < 0 || ti >= frames || iy < 0 || iy >= h || ix < 0 ||
                      ix >= w_in)
                    continue;
                  acc += w[(((co * cin + ci) * kt + jt) * kh + ky) * kw + kx] *
                         x[((ti * cin + ci) * h + iy) * w_in + ix];
                }
          out[((t * cout + co) * oh + oy) * ow + ox] = acc;
        }
  return out;
}

inline std::vector<double> MaxPool(const std::vector<double>& x, int64_t planes,
                                   int64_t h, int64_t w, int64_t k,
                                   int64_t stride, int64_t pad) {
  const int64_t oh = (h + 2 * pad - k) / stride + 1;
  const int64_t ow = (w + 2 * pad - k) / stride + 1;
  std::vector<double> out;
  for (int64_t p = 0; p < planes; ++p)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        for (int64_t ky = 0; ky < k; ++ky)
          for (int64_t kx = 0; kx < k; ++kx) {
            const int64_t iy = oy * stride + ky - pad;
            const int64_t ix = ox * stride + kx - pad;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            best = std::max(best, x[(p * h + iy) * w + ix]);
          }
        out.push_back(best);
      }
  return out;
}

// x [M,C], w [K,C] -> [M,K]
inline std::vector<double> MatMulT(const std::vector<double>& x, int64_t m,
                                   int64_t c, const std::vector<double>& w,
                                   int64_t k, const std::vector<double>& b) {
  std::vector<double> out(m * k);
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < k; ++j) {
      double acc = b[j];
      for (int64_t p = 0; p < c; ++p) acc += x[i * c + p] * w[j * c + p];
      out[i * k + j] = acc;
    }
  return out;
}

// Largest absolute difference relative to the largest magnitude present.
inline double RelativeError(const std::vector<double>& a,
                            const std::vector<double>& b) {
  double diff = 0, scale = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return scale == 0 ? diff : diff / scale;
}

template <typename S>
std::vector<double> ToDouble(std::span<const S> v) {
  return std::vector<double>(v.begin(), v.end());
}

using LossFn = std::function<Tensor<double>(tanet::Tape<double>&,
                                            std::vector<Tensor<double>>&)>;

// Central differences with step eps on every input element, compared with
// the taped gradient. Returns the worst relative error over all inputs.
inline double GradientCheck(const LossFn& loss,
                            std::vector<Tensor<double>> inputs,
                            double eps = 1e-4) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.DropGrad();
  }
  {
    tanet::Tape<double> tape;
    Tensor<double> l = loss(tape, inputs);
    tape.Backward(l);
  }
  double worst = 0;
  for (auto& in : inputs) {
    std::vector<double> analytic = in.has_grad()
                                       ? ToDouble<double>(in.grad())
                                       : std::vector<double>(in.numel(), 0.0);
    std::vector<double> numeric(in.numel());
    auto values = in.mutable_data();
    for (int64_t i = 0; i < in.numel(); ++i) {
      const double saved = values[i];
      tanet::Tape<double> tape(tanet::Tape<double>::Mode::kInference);
      values[i] = saved + eps;
      const double up = loss(tape, inputs).item();
      values[i] = saved - eps;
      const double down = loss(tape, inputs).item();
      values[i] = saved;
      numeric[i] = (up - down) / (2 * eps);
    }
    worst = std::max(worst, RelativeError(analytic, numeric));
  }
  return worst;
}

}  // namespace oracle

#endif  // TAN_TESTS_ORACLES_H_
