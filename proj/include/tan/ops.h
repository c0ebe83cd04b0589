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

#ifndef TAN_OPS_H_
#define TAN_OPS_H_

#include "tan/tape.h"
#include "tan/tensor.h"

// Forward ops over clip-shaped tensors [T, C, H, W]. Every op records its
// backward rule on the tape when any input requires grad.
//
// Spatial ops act on each frame independently; temporal ops act along T and
// are shared across all spatial sites. Convolutions use zero padding and
// cross-correlation semantics; `b` may be an undefined Tensor for no bias.

namespace tanet {

enum class ConvPath {
  kDirect,  // nested-loop reference
  kGemm,    // im2col + blocked matrix multiply
};

ConvPath DefaultConvPath();
void SetDefaultConvPath(ConvPath path);

// x [T,Cin,H,W], w [Cout,Cin,kh,kw] -> [T,Cout,H',W'].
template <typename S>
Tensor<S> Conv2dPerFrame(Tape<S>& tape, const Tensor<S>& x,
                         const Tensor<S>& w, const Tensor<S>& b, int stride,
                         int pad, ConvPath path = DefaultConvPath());

// x [T,C,H,W], w [Cout,C,k] -> [T,Cout,H,W]. Temporal zero padding of
// dilation*(k-1)/2 per side keeps T unchanged.
template <typename S>
Tensor<S> Conv1dTemporal(Tape<S>& tape, const Tensor<S>& x,
                         const Tensor<S>& w, const Tensor<S>& b, int dilation,
                         ConvPath path = DefaultConvPath());

// Joint spatio-temporal convolution, x [T,Cin,H,W], w [Cout,Cin,kt,kh,kw].
// Temporal stride 1 with (kt-1)/2 padding; spatial stride/pad as given.
template <typename S>
Tensor<S> Conv3d(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& w,
                 const Tensor<S>& b, int stride, int pad,
                 ConvPath path = DefaultConvPath());

// Padded cells never win; ties go to the first cell in row-major order.
template <typename S>
Tensor<S> MaxPool2dPerFrame(Tape<S>& tape, const Tensor<S>& x, int kernel,
                            int stride, int pad = 0);

// Padded cells count as zeros (divisor is always kernel*kernel).
template <typename S>
Tensor<S> AvgPool2dPerFrame(Tape<S>& tape, const Tensor<S>& x, int kernel,
                            int stride, int pad = 0);

template <typename S>
Tensor<S> MaxPoolTemporal(Tape<S>& tape, const Tensor<S>& x, int kernel,
                          int stride);

template <typename S>
Tensor<S> AvgPoolTemporal(Tape<S>& tape, const Tensor<S>& x, int kernel,
                          int stride);

template <typename S>
Tensor<S> Add(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& y);

// Elementwise product of equally shaped tensors.
template <typename S>
Tensor<S> Mul(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& y);

template <typename S>
Tensor<S> Relu(Tape<S>& tape, const Tensor<S>& x);

template <typename S>
Tensor<S> Sigmoid(Tape<S>& tape, const Tensor<S>& x);

// [T,C,H,W] -> [T,C], mean over H*W.
template <typename S>
Tensor<S> SpatialAvgPool(Tape<S>& tape, const Tensor<S>& x);

// x [T,C], w [K,C], b [K] -> [T,K].
template <typename S>
Tensor<S> Linear(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& w,
                 const Tensor<S>& b);

// Sum of all elements, shape [1].
template <typename S>
Tensor<S> Sum(Tape<S>& tape, const Tensor<S>& x);

// Repeats every slice along axis 0 `factor` times (nearest upsampling in T).
template <typename S>
Tensor<S> RepeatFrames(Tape<S>& tape, const Tensor<S>& x, int factor);

// Numerically stable logistic function on a plain value.
template <typename S>
S StableSigmoid(S z);

}  // namespace tanet

#endif  // TAN_OPS_H_
