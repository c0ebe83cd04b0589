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

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oracles.h"
#include "tan/diagnostics.h"
#include "tan/ops.h"
#include "tan/tape.h"
#include "tan/tensor.h"

namespace tanet {
namespace {

using T = Tensor<double>;
using TapeD = Tape<double>;

T FromVec(Shape shape, std::vector<double> v, bool requires_grad = false) {
  return T::FromData(std::move(shape), std::move(v), requires_grad);
}

std::vector<double> Values(const T& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

// Projects an op output onto fixed random weights so every output element
// carries a distinct upstream gradient.
class Projector {
 public:
  explicit Projector(uint64_t seed) : gen_(seed) {}
  T operator()(TapeD& tape, const T& out) {
    if (weights_.empty()) {
      weights_ = oracle::RandomValues(gen_, out.numel());
    }
    return Sum(tape, Mul(tape, out, FromVec(out.shape(), weights_)));
  }

 private:
  std::mt19937_64 gen_;
  std::vector<double> weights_;
};

constexpr double kGradTolerance = 1e-4;
constexpr int kGradCases = 20;

TEST(TensorTest, ShapeAndDataAgree) {
  T t = T::Zeros({2, 3, 4});
  EXPECT_EQ(t.numel(), 24);
  EXPECT_EQ(t.rank(), 3);
  EXPECT_FALSE(t.has_grad());
  t.mutable_grad();
  EXPECT_EQ(t.grad().size(), t.data().size());
  EXPECT_THROW(T::FromData({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(T::Zeros({2, 0}), ShapeError);
  EXPECT_THROW(t.dim(3), ShapeError);
}

TEST(TensorTest, NonFiniteIsDetectable) {
  T t = FromVec({2}, {1.0, std::nan("")});
  EXPECT_FALSE(t.AllFinite());
  EXPECT_TRUE(FromVec({1}, {2.0}).AllFinite());
}

TEST(TensorTest, CopiesShareStorageAndCloneDoesNot) {
  T a = FromVec({2}, {1, 2});
  T b = a;
  T c = a.Clone();
  EXPECT_TRUE(a.SameStorage(b));
  EXPECT_FALSE(a.SameStorage(c));
  EXPECT_EQ(Values(c), Values(a));
}

TEST(Conv2dTest, AllOnesSum) {
  TapeD tape;
  T out = Conv2dPerFrame(tape, T::Filled({1, 1, 3, 3}, 1),
                         T::Filled({1, 1, 3, 3}, 1), T::Zeros({1}), 1, 0);
  EXPECT_EQ(out.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(out.item(), 9);
}

TEST(Conv2dTest, ImpulseGivesKernelFootprint) {
  for (ConvPath path : {ConvPath::kDirect, ConvPath::kGemm}) {
    T x = T::Zeros({1, 1, 5, 5});
    x.mutable_data()[12] = 1;
    TapeD tape;
    T out = Conv2dPerFrame(tape, x, T::Filled({1, 1, 3, 3}, 1), T::Zeros({1}),
                           1, 1, path);
    ASSERT_EQ(out.shape(), (Shape{1, 1, 5, 5}));
    for (int y = 0; y < 5; ++y) {
      for (int xx = 0; xx < 5; ++xx) {
        const bool inside = y >= 1 && y <= 3 && xx >= 1 && xx <= 3;
        EXPECT_EQ(out.at({0, 0, y, xx}), inside ? 1.0 : 0.0);
      }
    }
  }
}

TEST(Conv2dTest, RandomCaseMatchesLoopOracle) {
  std::mt19937_64 gen(11);
  auto xv = oracle::RandomValues(gen, 2 * 3 * 8 * 8);
  auto wv = oracle::RandomValues(gen, 4 * 3 * 3 * 3);
  auto bv = oracle::RandomValues(gen, 4);
  int64_t oh, ow;
  auto expected =
      oracle::Conv(xv, 2, 3, 8, 8, wv, 4, 1, 3, 3, &bv, 1, 0, 1, 0, &oh, &ow);
  for (ConvPath path : {ConvPath::kDirect, ConvPath::kGemm}) {
    TapeD tape;
    T out = Conv2dPerFrame(tape, FromVec({2, 3, 8, 8}, xv),
                           FromVec({4, 3, 3, 3}, wv), FromVec({4}, bv), 1, 0,
                           path);
    EXPECT_EQ(out.shape(), (Shape{2, 4, oh, ow}));
    EXPECT_LT(oracle::RelativeError(Values(out), expected), 1e-6);
  }
}

TEST(Conv2dTest, ChannelMismatchIsDescriptive) {
  TapeD tape;
  try {
    Conv2dPerFrame(tape, T::Zeros({1, 2, 4, 4}), T::Zeros({1, 3, 3, 3}),
                   T::Zeros({1}), 1, 1);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos)
        << e.what();
  }
  EXPECT_THROW(Conv2dPerFrame(tape, T::Zeros({1, 1, 4, 4}),
                              T::Zeros({1, 1, 2, 2}), T(), 1, 0),
               ShapeError);
}

TEST(Conv1dTest, DilatedImpulse) {
  TapeD tape;
  T x = FromVec({5, 1, 1, 1}, {0, 0, 1, 0, 0});
  T w = T::Filled({1, 1, 3}, 1);
  EXPECT_EQ(Values(Conv1dTemporal(tape, x, w, T::Zeros({1}), 2)),
            (std::vector<double>{1, 0, 1, 0, 1}));
  EXPECT_EQ(Values(Conv1dTemporal(tape, x, w, T::Zeros({1}), 1)),
            (std::vector<double>{0, 1, 1, 1, 0}));
}

TEST(Conv1dTest, RandomCaseMatchesLoopOracle) {
  std::mt19937_64 gen(12);
  auto xv = oracle::RandomValues(gen, 8 * 4 * 2 * 2);
  auto wv = oracle::RandomValues(gen, 4 * 4 * 3);
  auto bv = oracle::RandomValues(gen, 4);
  int64_t oh, ow;
  auto expected =
      oracle::Conv(xv, 8, 4, 2, 2, wv, 4, 3, 1, 1, &bv, 1, 0, 3, 3, &oh, &ow);
  for (ConvPath path : {ConvPath::kDirect, ConvPath::kGemm}) {
    TapeD tape;
    T out = Conv1dTemporal(tape, FromVec({8, 4, 2, 2}, xv),
                           FromVec({4, 4, 3}, wv), FromVec({4}, bv), 3, path);
    EXPECT_EQ(out.shape(), (Shape{8, 4, 2, 2}));
    EXPECT_LT(oracle::RelativeError(Values(out), expected), 1e-6);
  }
}

TEST(Conv1dTest, PreservesFramesForEveryDilation) {
  std::mt19937_64 gen(13);
  for (int frames : {1, 2, 5, 16}) {
    for (int dilation : {1, 2, 3, 5, 8, 20}) {
      ScopedWarningHandler quiet([](const std::string&) {});
      TapeD tape;
      T out = Conv1dTemporal(
          tape, FromVec({frames, 2, 3, 3}, oracle::RandomValues(gen, frames * 18)),
          FromVec({2, 2, 3}, oracle::RandomValues(gen, 12)), T(), dilation);
      EXPECT_EQ(out.dim(0), frames);
    }
  }
}

TEST(Conv1dTest, OversizedDilationWarns) {
  std::vector<std::string> warnings;
  ScopedWarningHandler capture(
      [&](const std::string& m) { warnings.push_back(m); });
  TapeD tape;
  Conv1dTemporal(tape, T::Zeros({4, 1, 1, 1}), T::Filled({1, 1, 3}, 1), T(),
                 2);
  EXPECT_TRUE(warnings.empty());
  Conv1dTemporal(tape, T::Zeros({4, 1, 1, 1}), T::Filled({1, 1, 3}, 1), T(),
                 4);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Conv1dTest, EvenKernelRejected) {
  TapeD tape;
  EXPECT_THROW(Conv1dTemporal(tape, T::Zeros({4, 1, 1, 1}),
                              T::Zeros({1, 1, 2}), T(), 1),
               ShapeError);
}

TEST(MaxPoolTest, HandCases) {
  TapeD tape;
  T x = FromVec({1, 1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(MaxPool2dPerFrame(tape, x, 2, 2).item(), 4);
}

TEST(MaxPoolTest, TiesRouteGradientToFirstCell) {
  T x = T::Filled({1, 1, 2, 2}, 3.0, true);
  TapeD tape;
  T out = MaxPool2dPerFrame(tape, x, 2, 2);
  EXPECT_EQ(out.item(), 3.0);
  T loss = Sum(tape, out);
  tape.Backward(loss);
  EXPECT_EQ(Values(FromVec({4}, {x.grad().begin(), x.grad().end()})),
            (std::vector<double>{1, 0, 0, 0}));
}

TEST(MaxPoolTest, RandomCaseMatchesWindowOracle) {
  std::mt19937_64 gen(14);
  auto xv = oracle::RandomValues(gen, 2 * 2 * 6 * 6);
  TapeD tape;
  T out = MaxPool2dPerFrame(tape, FromVec({2, 2, 6, 6}, xv), 2, 2);
  EXPECT_EQ(out.shape(), (Shape{2, 2, 3, 3}));
  EXPECT_EQ(Values(out), oracle::MaxPool(xv, 4, 6, 6, 2, 2, 0));
  T padded = MaxPool2dPerFrame(tape, FromVec({2, 2, 6, 6}, xv), 3, 2, 1);
  EXPECT_EQ(Values(padded), oracle::MaxPool(xv, 4, 6, 6, 3, 2, 1));
}

TEST(ElementwiseTest, HandCases) {
  TapeD tape;
  EXPECT_EQ(Values(Relu(tape, FromVec({3}, {-1, 0, 2}))),
            (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(Sigmoid(tape, FromVec({1}, {0})).item(), 0.5);
  T x = FromVec({3}, {0.25, -7, 3e8});
  EXPECT_EQ(Values(Add(tape, x, T::Zeros({3}))), Values(x));
  EXPECT_THROW(Add(tape, x, T::Zeros({2})), ShapeError);
  EXPECT_THROW(Mul(tape, x, T::Zeros({1, 3})), ShapeError);
}

TEST(ElementwiseTest, SigmoidStaysFiniteForLargeInputs) {
  TapeD tape;
  T out = Sigmoid(tape, FromVec({4}, {-800, -50, 50, 800}));
  EXPECT_TRUE(out.AllFinite());
  EXPECT_EQ(out.data()[3], 1.0);
  EXPECT_EQ(out.data()[0], 0.0);
}

TEST(SpatialAvgPoolTest, HandCasesAndOracle) {
  TapeD tape;
  T ones = SpatialAvgPool(tape, T::Filled({2, 3, 4, 4}, 1));
  EXPECT_EQ(ones.shape(), (Shape{2, 3}));
  for (double v : ones.data()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(SpatialAvgPool(tape, FromVec({1, 1, 2, 2}, {0, 1, 0, 0})).item(),
            0.25);
  std::mt19937_64 gen(15);
  auto xv = oracle::RandomValues(gen, 3 * 2 * 5 * 3);
  T out = SpatialAvgPool(tape, FromVec({3, 2, 5, 3}, xv));
  for (int p = 0; p < 6; ++p) {
    double sum = 0;
    for (int i = 0; i < 15; ++i) sum += xv[p * 15 + i];
    EXPECT_NEAR(out.data()[p], sum / 15, 1e-12);
  }
}

TEST(LinearTest, HandCasesAndOracle) {
  TapeD tape;
  T x = FromVec({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(Values(Linear(tape, x, FromVec({2, 2}, {1, 0, 0, 1}),
                          T::Zeros({2}))),
            Values(x));
  EXPECT_EQ(Linear(tape, FromVec({1, 2}, {1, 2}), FromVec({1, 2}, {1, 1}),
                   FromVec({1}, {1}))
                .item(),
            4);
  std::mt19937_64 gen(16);
  auto xv = oracle::RandomValues(gen, 5 * 7);
  auto wv = oracle::RandomValues(gen, 3 * 7);
  auto bv = oracle::RandomValues(gen, 3);
  T out = Linear(tape, FromVec({5, 7}, xv), FromVec({3, 7}, wv),
                 FromVec({3}, bv));
  EXPECT_LT(oracle::RelativeError(Values(out),
                                  oracle::MatMulT(xv, 5, 7, wv, 3, bv)),
            1e-6);
  EXPECT_THROW(Linear(tape, x, T::Zeros({2, 3}), T::Zeros({2})), ShapeError);
}

TEST(BackwardTest, SumGivesOnes) {
  T x = FromVec({2, 3}, {1, -2, 3, 0.5, 7, -1}, true);
  TapeD tape;
  T loss = Sum(tape, x);
  tape.Backward(loss);
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(BackwardTest, ReluMasksNonPositive) {
  T x = FromVec({2}, {-1, 1}, true);
  TapeD tape;
  T loss = Sum(tape, Relu(tape, x));
  tape.Backward(loss);
  EXPECT_EQ(Values(FromVec({2}, {x.grad().begin(), x.grad().end()})),
            (std::vector<double>{0, 1}));
}

TEST(BackwardTest, SecondBackwardIsAnError) {
  T x = FromVec({2}, {1, 2}, true);
  TapeD tape;
  T loss = Sum(tape, x);
  tape.Backward(loss);
  EXPECT_THROW(tape.Backward(loss), GraphError);
  tape.Reset();
  T again = Sum(tape, x);
  EXPECT_NO_THROW(tape.Backward(again));
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(BackwardTest, NonScalarLossRejected) {
  T x = FromVec({2}, {1, 2}, true);
  TapeD tape;
  T y = Relu(tape, x);
  EXPECT_THROW(tape.Backward(y), ShapeError);
}

TEST(BackwardTest, TwoConsumersAccumulate) {
  std::mt19937_64 gen(17);
  T x = FromVec({4}, oracle::SeparatedValues(gen, 4, 0.5), true);
  T w = FromVec({4}, oracle::RandomValues(gen, 4));
  T branch_a, branch_b;
  {
    T xa = x.Clone();
    xa.set_requires_grad(true);
    TapeD tape;
    T loss = Sum(tape, Relu(tape, xa));
    tape.Backward(loss);
    branch_a = FromVec({4}, {xa.grad().begin(), xa.grad().end()});
  }
  {
    T xb = x.Clone();
    xb.set_requires_grad(true);
    TapeD tape;
    T loss = Sum(tape, Mul(tape, xb, w));
    tape.Backward(loss);
    branch_b = FromVec({4}, {xb.grad().begin(), xb.grad().end()});
  }
  TapeD tape;
  T loss = Add(tape, Sum(tape, Relu(tape, x)), Sum(tape, Mul(tape, x, w)));
  tape.Backward(loss);
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(x.grad()[i], branch_a.data()[i] + branch_b.data()[i]);
  }
}

TEST(BackwardTest, InferenceTapeRecordsNothing) {
  T x = FromVec({2}, {1, 2}, true);
  TapeD tape(TapeD::Mode::kInference);
  Relu(tape, x);
  EXPECT_EQ(tape.size(), 0u);
}

// One gradient check per op family and per case index; inputs are drawn so
// that kinks and ties sit far from the probe step.
class GradientCheckTest : public ::testing::TestWithParam<int> {
 protected:
  std::mt19937_64 gen_{1000 + static_cast<uint64_t>(GetParam())};

  T Smooth(Shape shape) {
    return FromVec(shape, oracle::RandomValues(gen_, NumElements(shape)));
  }
  T Separated(Shape shape) {
    return FromVec(shape, oracle::SeparatedValues(gen_, NumElements(shape)));
  }
  int Pick(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  double Check(const oracle::LossFn& fn, std::vector<T> inputs) {
    return oracle::GradientCheck(fn, std::move(inputs));
  }
};

TEST_P(GradientCheckTest, Conv2d) {
  const int cin = Pick(1, 3), cout = Pick(1, 3), k = 2 * Pick(0, 1) + 1;
  const int stride = Pick(1, 2), pad = Pick(0, k / 2);
  const int h = Pick(k, 6), w = Pick(k, 6), t = Pick(1, 2);
  auto proj = std::make_shared<Projector>(GetParam());
  const ConvPath path = GetParam() % 2 ? ConvPath::kGemm : ConvPath::kDirect;
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, Conv2dPerFrame(tape, in[0], in[1],
                                                      in[2], stride, pad,
                                                      path));
                },
                {Smooth({t, cin, h, w}), Smooth({cout, cin, k, k}),
                 Smooth({cout})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, Conv1dTemporal) {
  const int c = Pick(1, 3), cout = Pick(1, 3), d = Pick(1, 3), t = Pick(2, 7);
  auto proj = std::make_shared<Projector>(GetParam());
  const ConvPath path = GetParam() % 2 ? ConvPath::kGemm : ConvPath::kDirect;
  ScopedWarningHandler quiet([](const std::string&) {});
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, Conv1dTemporal(tape, in[0], in[1],
                                                      in[2], d, path));
                },
                {Smooth({t, c, 2, 2}), Smooth({cout, c, 3}), Smooth({cout})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, Conv3d) {
  const int cin = Pick(1, 2), cout = Pick(1, 2), t = Pick(1, 4);
  const int stride = Pick(1, 2);
  auto proj = std::make_shared<Projector>(GetParam());
  const ConvPath path = GetParam() % 2 ? ConvPath::kGemm : ConvPath::kDirect;
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, Conv3d(tape, in[0], in[1], in[2],
                                              stride, 1, path));
                },
                {Smooth({t, cin, 4, 4}), Smooth({cout, cin, 3, 3, 3}),
                 Smooth({cout})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, MaxPool2d) {
  const int k = Pick(2, 3), stride = Pick(1, 2), pad = Pick(0, k / 2);
  auto proj = std::make_shared<Projector>(GetParam());
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape,
                                 MaxPool2dPerFrame(tape, in[0], k, stride, pad));
                },
                {Separated({2, 2, 5, 5})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, AvgPool2d) {
  const int k = Pick(2, 3), stride = Pick(1, 2), pad = Pick(0, k / 2);
  auto proj = std::make_shared<Projector>(GetParam());
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape,
                                 AvgPool2dPerFrame(tape, in[0], k, stride, pad));
                },
                {Smooth({2, 2, 5, 5})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, TemporalPools) {
  const int k = Pick(1, 3), stride = Pick(1, 2);
  auto proj = std::make_shared<Projector>(GetParam());
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, MaxPoolTemporal(tape, in[0], k, stride));
                },
                {Separated({6, 2, 2, 2})}),
            kGradTolerance);
  auto proj2 = std::make_shared<Projector>(GetParam() + 1);
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj2)(tape,
                                  AvgPoolTemporal(tape, in[0], k, stride));
                },
                {Smooth({6, 2, 2, 2})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, Elementwise) {
  auto proj = std::make_shared<Projector>(GetParam());
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  T sum = Add(tape, in[0], in[1]);
                  T prod = Mul(tape, sum, in[1]);
                  return (*proj)(tape, Add(tape, Relu(tape, prod),
                                           Sigmoid(tape, in[0])));
                },
                {Separated({3, 4}), Smooth({3, 4})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, Relu) {
  auto proj = std::make_shared<Projector>(GetParam());
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, Relu(tape, in[0]));
                },
                {Separated({2, 3, 2, 2})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, Sigmoid) {
  auto proj = std::make_shared<Projector>(GetParam());
  T x = Smooth({10});
  for (double& v : x.mutable_data()) v *= 8;
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, Sigmoid(tape, in[0]));
                },
                {x}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, SpatialAvgPoolAndLinear) {
  const int c = Pick(1, 4), k = Pick(1, 4), t = Pick(1, 3);
  auto proj = std::make_shared<Projector>(GetParam());
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, Linear(tape, SpatialAvgPool(tape, in[0]),
                                              in[1], in[2]));
                },
                {Smooth({t, c, 3, 2}), Smooth({k, c}), Smooth({k})}),
            kGradTolerance);
}

TEST_P(GradientCheckTest, SumAndRepeatFrames) {
  const int factor = Pick(1, 4);
  auto proj = std::make_shared<Projector>(GetParam());
  EXPECT_LT(Check(
                [=](TapeD& tape, std::vector<T>& in) {
                  return (*proj)(tape, RepeatFrames(tape, in[0], factor));
                },
                {Smooth({3, 4})}),
            kGradTolerance);
}

INSTANTIATE_TEST_SUITE_P(RandomCases, GradientCheckTest,
                         ::testing::Range(0, kGradCases));

// Optimized path against the direct path and the test oracle, forward and
// backward, over randomized geometries.
TEST(ConvPathTest, GemmMatchesDirectOnRandomShapes) {
  std::mt19937_64 gen(99);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen);
  };
  int shapes = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int kind = trial % 3;
    const int t = pick(1, 5), cin = pick(1, 5), cout = pick(1, 5);
    const int k = kind == 1 ? 3 : 2 * pick(0, 3) + 1;
    const int h = pick(k, 9), w = pick(k, 9);
    const int stride = kind == 1 ? 1 : pick(1, 3);
    const int pad = kind == 1 ? 0 : pick(0, k / 2);
    const int dilation = pick(1, 4);
    Shape wshape = kind == 0   ? Shape{cout, cin, k, k}
                   : kind == 1 ? Shape{cout, cin, k}
                               : Shape{cout, cin, 3, k, k};
    const Shape xshape{t, cin, h, w};
    auto xv = oracle::RandomValues(gen, NumElements(xshape));
    auto wv = oracle::RandomValues(gen, NumElements(wshape));
    auto bv = oracle::RandomValues(gen, cout);
    int64_t oh, ow;
    std::vector<double> expected =
        kind == 0 ? oracle::Conv(xv, t, cin, h, w, wv, cout, 1, k, k, &bv,
                                 stride, pad, 1, 0, &oh, &ow)
        : kind == 1
            ? oracle::Conv(xv, t, cin, h, w, wv, cout, 3, 1, 1, &bv, 1, 0,
                           dilation, dilation, &oh, &ow)
            : oracle::Conv(xv, t, cin, h, w, wv, cout, 3, k, k, &bv, stride,
                           pad, 1, 1, &oh, &ow);
    std::vector<std::vector<double>> outs, dxs, dws, dbs;
    for (ConvPath path : {ConvPath::kDirect, ConvPath::kGemm}) {
      T x = FromVec(xshape, xv), wt = FromVec(wshape, wv), b = FromVec({cout}, bv);
      x.set_requires_grad(true);
      wt.set_requires_grad(true);
      b.set_requires_grad(true);
      ScopedWarningHandler quiet([](const std::string&) {});
      TapeD tape;
      T out = kind == 0 ? Conv2dPerFrame(tape, x, wt, b, stride, pad, path)
              : kind == 1
                  ? Conv1dTemporal(tape, x, wt, b, dilation, path)
                  : Conv3d(tape, x, wt, b, stride, pad, path);
      Projector proj(trial);
      T loss = proj(tape, out);
      tape.Backward(loss);
      outs.push_back(Values(out));
      dxs.push_back({x.grad().begin(), x.grad().end()});
      dws.push_back({wt.grad().begin(), wt.grad().end()});
      dbs.push_back({b.grad().begin(), b.grad().end()});
    }
    EXPECT_LT(oracle::RelativeError(outs[0], expected), 1e-6) << trial;
    EXPECT_LT(oracle::RelativeError(outs[1], expected), 1e-6) << trial;
    EXPECT_LT(oracle::RelativeError(dxs[0], dxs[1]), 1e-6) << trial;
    EXPECT_LT(oracle::RelativeError(dws[0], dws[1]), 1e-6) << trial;
    EXPECT_LT(oracle::RelativeError(dbs[0], dbs[1]), 1e-6) << trial;
    ++shapes;
  }
  EXPECT_GE(shapes, 50);
}

TEST(ConvPathTest, FloatGemmMatchesDoubleOracle) {
  std::mt19937_64 gen(5);
  auto xv = oracle::RandomValues(gen, 4 * 8 * 8 * 8);
  auto wv = oracle::RandomValues(gen, 16 * 8 * 3 * 3);
  int64_t oh, ow;
  auto expected =
      oracle::Conv(xv, 4, 8, 8, 8, wv, 16, 1, 3, 3, nullptr, 1, 1, 1, 0, &oh, &ow);
  Tape<float> tape;
  Tensor<float> out = Conv2dPerFrame(
      tape, Cast<float>(FromVec({4, 8, 8, 8}, xv)),
      Cast<float>(FromVec({16, 8, 3, 3}, wv)), Tensor<float>(), 1, 1);
  EXPECT_LT(oracle::RelativeError(oracle::ToDouble<float>(out.data()), expected),
            1e-5);
}

// Shapes wide enough for the register-tiled float kernel and the pointwise
// column path; gradients come from the double direct path.
TEST(ConvPathTest, FloatGemmGradientsMatchDoubleDirect) {
  struct Case {
    Shape x, w;
    int kind;  // 0: conv2d pad 1, 1: conv2d 1x1, 2: temporal, dilation 2
  };
  const std::vector<Case> cases = {{{4, 8, 8, 8}, {16, 8, 3, 3}, 0},
                                   {{16, 16, 8, 8}, {4, 16, 1, 1}, 1},
                                   {{16, 16, 8, 8}, {16, 16, 3}, 2}};
  std::mt19937_64 gen(17);
  for (const Case& c : cases) {
    const auto xv = oracle::RandomValues(gen, NumElements(c.x));
    const auto wv = oracle::RandomValues(gen, NumElements(c.w));
    const int64_t cout = c.w[0];
    auto run = [&](auto scalar, ConvPath path) {
      using S = decltype(scalar);
      Tensor<S> x = Cast<S>(FromVec(c.x, xv));
      Tensor<S> w = Cast<S>(FromVec(c.w, wv));
      Tensor<S> b = Tensor<S>::Zeros({cout});
      x.set_requires_grad(true);
      w.set_requires_grad(true);
      Tape<S> tape;
      Tensor<S> out = c.kind == 0   ? Conv2dPerFrame(tape, x, w, b, 1, 1, path)
                      : c.kind == 1 ? Conv2dPerFrame(tape, x, w, b, 1, 0, path)
                                    : Conv1dTemporal(tape, x, w, b, 2, path);
      std::mt19937_64 proj_gen(3);
      const auto pw = oracle::RandomValues(proj_gen, out.numel());
      Tensor<S> loss =
          Sum(tape, Mul(tape, out, Cast<S>(FromVec(out.shape(), pw))));
      tape.Backward(loss);
      return std::make_pair(oracle::ToDouble<S>(x.grad()),
                            oracle::ToDouble<S>(w.grad()));
    };
    const auto want = run(0.0, ConvPath::kDirect);
    const auto got = run(0.0f, ConvPath::kGemm);
    EXPECT_LT(oracle::RelativeError(got.first, want.first), 1e-5) << c.kind;
    EXPECT_LT(oracle::RelativeError(got.second, want.second), 1e-5) << c.kind;
  }
}

TEST(LinearityTest, ConvolutionsAreLinearInInput) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = 1.7 - 0.3 * trial, b = -0.4 + 0.1 * trial;
    auto xv = oracle::RandomValues(gen, 3 * 2 * 6 * 6);
    auto yv = oracle::RandomValues(gen, 3 * 2 * 6 * 6);
    std::vector<double> mix(xv.size());
    for (size_t i = 0; i < xv.size(); ++i) mix[i] = a * xv[i] + b * yv[i];
    auto w2 = FromVec({3, 2, 3, 3}, oracle::RandomValues(gen, 54));
    auto w1 = FromVec({3, 2, 3}, oracle::RandomValues(gen, 18));
    auto w3 = FromVec({3, 2, 3, 3, 3}, oracle::RandomValues(gen, 162));
    auto ops = std::vector<std::function<T(TapeD&, const T&)>>{
        [&](TapeD& t, const T& x) { return Conv2dPerFrame(t, x, w2, T(), 1, 1); },
        [&](TapeD& t, const T& x) { return Conv1dTemporal(t, x, w1, T(), 2); },
        [&](TapeD& t, const T& x) { return Conv3d(t, x, w3, T(), 2, 1); }};
    for (auto& op : ops) {
      TapeD tape;
      auto fx = Values(op(tape, FromVec({3, 2, 6, 6}, xv)));
      auto fy = Values(op(tape, FromVec({3, 2, 6, 6}, yv)));
      auto fm = Values(op(tape, FromVec({3, 2, 6, 6}, mix)));
      std::vector<double> combined(fx.size());
      for (size_t i = 0; i < fx.size(); ++i) combined[i] = a * fx[i] + b * fy[i];
      EXPECT_LT(oracle::RelativeError(fm, combined), 1e-5);
    }
  }
}

TEST(DiagnosticsTest, MacCounterCountsNominalTaps) {
  TapeD tape;
  MacCounter counter;
  Conv2dPerFrame(tape, T::Zeros({2, 16, 16, 16}), T::Zeros({16, 16, 3, 3}),
                 T::Zeros({16}), 1, 1);
  EXPECT_EQ(counter.count(), 2 * 589824);
}

}  // namespace
}  // namespace tanet
