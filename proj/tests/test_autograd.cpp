// Copyright 2026 The ftmssm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "ftmssm/autograd.hpp"
#include "ftmssm/error.hpp"
#include "ftmssm/ops.hpp"
#include "ftmssm/rng.hpp"

namespace ftm {
namespace {

constexpr double kRel = 1e-4;
constexpr double kAbs = 1e-8;

ParameterSet one(const std::string& name, Tensor v) {
  ParameterSet ps;
  ps.add(name, std::move(v));
  return ps;
}

TEST(Autograd, QuadraticCentralDifference) {
  const auto ps = one("w", Tensor({1}, std::vector<double>{3.0}));
  const LossFn f = [](const ParamVars& pv) { return sum(square(pv["w"])); };
  const auto fd = finite_difference_gradient(f, ps, 1e-5);
  EXPECT_NEAR(fd.get("w")[0], 6.0, 1e-8);
  EXPECT_NEAR(gradient(f, ps).get("w")[0], 6.0, 1e-15);
}

TEST(Autograd, TwoLayerPerceptron37Params) {
  // 3 -> 4 -> 5 with biases: 12 + 4 + 20 + 1... = 37 scalars with a 1-wide
  // readout bias.
  Rng rng(5);
  ParameterSet ps;
  ps.add("w1", rng.normal_tensor({3, 4}, 0.5));
  ps.add("b1", rng.normal_tensor({4}, 0.1));
  ps.add("w2", rng.normal_tensor({4, 5}, 0.5));
  ps.add("b2", rng.normal_tensor({1}, 0.1));
  ASSERT_EQ(ps.scalar_count(), 37u);
  const Tensor x = rng.normal_tensor({6, 3});
  const Tensor r = rng.normal_tensor({6, 5});
  const LossFn f = [&](const ParamVars& pv) {
    const Var h = sigmoid(linear(constant(x), pv["w1"], pv["b1"]));
    const Var o = linear(h, pv["w2"]);
    return add(weighted_sum(o, r), scale(sum(pv["b2"]), 6.0));
  };
  const auto rep = grad_check(f, ps, 1e-6, 1e-12);
  EXPECT_TRUE(rep.passed) << rep.worst_param << " " << rep.worst_relative_error;
}

TEST(Autograd, NonScalarLossIsRejected) {
  const auto ps = one("w", Tensor({2}, 1.0));
  EXPECT_THROW(gradient([](const ParamVars& pv) { return square(pv["w"]); }, ps), ContractViolation);
}

TEST(Autograd, NonFiniteValueNamesTheOp) {
  const auto ps = one("w", Tensor({1}, std::vector<double>{800.0}));
  try {
    gradient([](const ParamVars& pv) { return sum(exp(pv["w"])); }, ps);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("exp"), std::string::npos) << e.what();
  }
}

TEST(Autograd, FrozenParametersGetZeroGradient) {
  ParameterSet ps;
  ps.add("a", Tensor({2}, 1.5));
  ps.add("b", Tensor({2}, 2.0), true);
  const auto g = gradient([](const ParamVars& pv) { return sum(mul(pv["a"], pv["b"])); }, ps);
  EXPECT_DOUBLE_EQ(g.get("a")[0], 2.0);
  EXPECT_DOUBLE_EQ(g.get("b")[0], 0.0);
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  const auto ps = one("x", Tensor({1}, std::vector<double>{1.7}));
  // f = x*x + x -> f' = 2x + 1
  const auto g = gradient([](const ParamVars& pv) { return sum(add(mul(pv["x"], pv["x"]), pv["x"])); }, ps);
  EXPECT_NEAR(g.get("x")[0], 2 * 1.7 + 1, 1e-15);
}

TEST(Autograd, DeepChainDoesNotOverflowTheStack) {
  const auto ps = one("x", Tensor({1}, std::vector<double>{0.5}));
  const auto g = gradient(
      [](const ParamVars& pv) {
        Var v = pv["x"];
        for (int i = 0; i < 20000; ++i) v = scale(v, 1.0);
        return sum(v);
      },
      ps);
  EXPECT_DOUBLE_EQ(g.get("x")[0], 1.0);
}

TEST(Autograd, NegativeControlIsDetected) {
  Rng rng(2);
  const auto ps = one("x", rng.normal_tensor({5}));
  const auto rep = grad_check([](const ParamVars& pv) { return sum(square_with_wrong_adjoint(pv["x"])); }, ps, kRel,
                              kAbs);
  EXPECT_FALSE(rep.passed);
  EXPECT_EQ(rep.worst_param, "x");
}

TEST(Autograd, FiniteDifferenceRejectsBadEpsilon) {
  const auto ps = one("x", Tensor({1}, 1.0));
  EXPECT_THROW(finite_difference_gradient([](const ParamVars& pv) { return sum(pv["x"]); }, ps, 0.0),
               ContractViolation);
}

TEST(ParameterSet, DuplicateNamesRejected) {
  ParameterSet ps;
  ps.add("a", Tensor({1}));
  EXPECT_THROW(ps.add("a", Tensor({1})), ContractViolation);
  EXPECT_THROW(ps.get("missing"), ContractViolation);
}

// --- every primitive ---------------------------------------------------------

struct PrimitiveCase {
  const char* name;
  std::function<Var(const ParamVars&, const Tensor& r)> f;
  std::function<void(ParameterSet&, Rng&)> params;
  Shape out;
};

void check_primitive(const PrimitiveCase& c) {
  Rng rng(fnv1a64(c.name));
  ParameterSet ps;
  c.params(ps, rng);
  const Tensor r = rng.normal_tensor(c.out);
  const auto rep = grad_check([&](const ParamVars& pv) { return c.f(pv, r); }, ps, kRel, kAbs);
  EXPECT_TRUE(rep.passed) << c.name << ": " << rep.worst_param << " rel " << rep.worst_relative_error << " abs "
                          << rep.worst_absolute_error;
}

void two_inputs(ParameterSet& ps, Rng& rng) {
  ps.add("a", rng.normal_tensor({2, 3, 4}));
  ps.add("b", rng.normal_tensor({2, 3, 4}));
}

TEST(Primitives, ElementwiseGradients) {
  const Shape s{2, 3, 4};
  const std::vector<PrimitiveCase> cases = {
      {"add", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(add(pv["a"], pv["b"]), r); }, two_inputs, s},
      {"sub", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(sub(pv["a"], pv["b"]), r); }, two_inputs, s},
      {"mul", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(mul(pv["a"], pv["b"]), r); }, two_inputs, s},
      {"scale", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(scale(pv["a"], -1.7), r); }, two_inputs, s},
      {"neg", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(neg(pv["a"]), r); }, two_inputs, s},
      {"exp", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(exp(pv["a"]), r); }, two_inputs, s},
      {"sigmoid", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(sigmoid(pv["a"]), r); }, two_inputs, s},
      {"softplus", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(softplus(pv["a"]), r); }, two_inputs, s},
      {"silu", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(silu(pv["a"]), r); }, two_inputs, s},
      {"square", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(square(pv["a"]), r); }, two_inputs, s},
      {"time_reverse", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(time_reverse(pv["a"]), r); },
       two_inputs, s},
  };
  for (const auto& c : cases) check_primitive(c);
}

TEST(Primitives, ReductionsGradients) {
  check_primitive({"sum", [](const ParamVars& pv, const Tensor& r) { return scale(sum(pv["a"]), r[0]); }, two_inputs,
                   {1}});
  check_primitive({"sum_squares",
                   [](const ParamVars& pv, const Tensor& r) { return scale(sum_squares(pv["a"]), r[0]); }, two_inputs,
                   {1}});
}

TEST(Primitives, StructuredGradients) {
  check_primitive({"scalar_mul",
                   [](const ParamVars& pv, const Tensor& r) { return weighted_sum(scalar_mul(pv["s"], pv["x"]), r); },
                   [](ParameterSet& ps, Rng& rng) {
                     ps.add("s", rng.normal_tensor({1}));
                     ps.add("x", rng.normal_tensor({2, 5, 3}));
                   },
                   {2, 5, 3}});
  check_primitive({"linear",
                   [](const ParamVars& pv, const Tensor& r) {
                     return weighted_sum(linear(pv["x"], pv["w"], pv["b"]), r);
                   },
                   [](ParameterSet& ps, Rng& rng) {
                     ps.add("x", rng.normal_tensor({2, 5, 3}));
                     ps.add("w", rng.normal_tensor({3, 4}));
                     ps.add("b", rng.normal_tensor({4}));
                   },
                   {2, 5, 4}});
  check_primitive({"add_bias",
                   [](const ParamVars& pv, const Tensor& r) { return weighted_sum(add_bias(pv["x"], pv["b"]), r); },
                   [](ParameterSet& ps, Rng& rng) {
                     ps.add("x", rng.normal_tensor({2, 5, 3}));
                     ps.add("b", rng.normal_tensor({3}));
                   },
                   {2, 5, 3}});
  check_primitive({"add_over_time",
                   [](const ParamVars& pv, const Tensor& r) { return weighted_sum(add_over_time(pv["x"], pv["v"]), r); },
                   [](ParameterSet& ps, Rng& rng) {
                     ps.add("x", rng.normal_tensor({2, 5, 3}));
                     ps.add("v", rng.normal_tensor({2, 3}));
                   },
                   {2, 5, 3}});
  for (std::size_t dil : {1u, 2u, 4u}) {
    check_primitive({"depthwise_causal_conv",
                     [dil](const ParamVars& pv, const Tensor& r) {
                       return weighted_sum(depthwise_causal_conv(pv["x"], pv["w"], pv["b"], dil), r);
                     },
                     [](ParameterSet& ps, Rng& rng) {
                       ps.add("x", rng.normal_tensor({2, 9, 3}));
                       ps.add("w", rng.normal_tensor({3, 3}));
                       ps.add("b", rng.normal_tensor({3}));
                     },
                     {2, 9, 3}});
  }
  check_primitive({"conv1d_same",
                   [](const ParamVars& pv, const Tensor& r) {
                     return weighted_sum(conv1d_same(pv["x"], pv["w"], pv["b"]), r);
                   },
                   [](ParameterSet& ps, Rng& rng) {
                     ps.add("x", rng.normal_tensor({2, 6, 3}));
                     ps.add("w", rng.normal_tensor({3, 3, 4}));
                     ps.add("b", rng.normal_tensor({4}));
                   },
                   {2, 6, 4}});
}

TEST(Primitives, WaveletGradients) {
  for (std::size_t len : {6u, 7u}) {
    const std::size_t half = (len + 1) / 2;
    check_primitive({"haar_low", [](const ParamVars& pv, const Tensor& r) { return weighted_sum(haar_low(pv["x"]), r); },
                     [len](ParameterSet& ps, Rng& rng) { ps.add("x", rng.normal_tensor({2, len, 3})); },
                     {2, half, 3}});
    check_primitive({"haar_high",
                     [](const ParamVars& pv, const Tensor& r) { return weighted_sum(haar_high(pv["x"]), r); },
                     [len](ParameterSet& ps, Rng& rng) { ps.add("x", rng.normal_tensor({2, len, 3})); },
                     {2, half, 3}});
    check_primitive({"haar_inverse",
                     [len](const ParamVars& pv, const Tensor& r) {
                       return weighted_sum(haar_inverse(pv["lo"], pv["hi"], len), r);
                     },
                     [half](ParameterSet& ps, Rng& rng) {
                       ps.add("lo", rng.normal_tensor({2, half, 3}));
                       ps.add("hi", rng.normal_tensor({2, half, 3}));
                     },
                     {2, len, 3}});
    check_primitive({"upsample_repeat",
                     [len](const ParamVars& pv, const Tensor& r) {
                       return weighted_sum(upsample_repeat(pv["x"], len), r);
                     },
                     [half](ParameterSet& ps, Rng& rng) { ps.add("x", rng.normal_tensor({2, half, 3})); },
                     {2, len, 3}});
  }
}

TEST(Primitives, ShapeMismatchesAreContractViolations) {
  const Var a = constant(Tensor({2, 3}));
  const Var b = constant(Tensor({3, 2}));
  EXPECT_THROW(add(a, b), ContractViolation);
  EXPECT_THROW(linear(a, constant(Tensor({2, 2}))), ContractViolation);
  EXPECT_THROW(weighted_sum(a, Tensor({5})), ContractViolation);
}

}  // namespace
}  // namespace ftm
