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

#include "ftmssm/denoiser.hpp"
#include "ftmssm/error.hpp"
#include "ftmssm/freq_mamba.hpp"
#include "ftmssm/gradcheck_suite.hpp"
#include "ftmssm/layers.hpp"
#include "ftmssm/ops.hpp"
#include "ftmssm/ssm.hpp"
#include "ftmssm/text_mamba.hpp"
#include "ftmssm/wavelet.hpp"
#include "block_oracles.hpp"
#include "ssm_oracles.hpp"

namespace ftm {
namespace {

using testing::plain_projections;
using testing::vanilla_scan;

// Naive dilated causal depthwise convolution.
Tensor naive_dconv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t dil) {
  const std::size_t bs = x.dim(0), len = x.dim(1), d = x.dim(2), k = w.dim(1);
  Tensor y(x.shape());
  for (std::size_t n = 0; n < bs; ++n)
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t c = 0; c < d; ++c) {
        double acc = b[c];
        for (std::size_t j = 0; j < k; ++j) {
          if (t >= j * dil) acc += w[c * k + j] * x[(n * len + t - j * dil) * d + c];
        }
        y[(n * len + t) * d + c] = acc;
      }
  return y;
}

TEST(CdwConv, MatchesNaiveDilatedOracle) {
  Rng rng(1);
  ParameterSet ps;
  init_cdwconv(ps, "cdw", 3, rng);
  const Tensor x = rng.normal_tensor({2, 20, 3});
  Tensor ref = x;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string st = "cdw.cdw" + std::to_string(i);
    ref = naive_dconv(ref, ps.get(st + ".w"), ps.get(st + ".b"), kCdwDilations[i]);
  }
  const ParamVars pv(ps, false);
  EXPECT_LT(max_abs_diff(cdwconv(pv, "cdw", constant(x)).value(), ref), 1e-13);
}

TEST(CdwConv, ReceptiveFieldIsFifteenFramesAndCausal) {
  Rng rng(2);
  ParameterSet ps;
  init_cdwconv(ps, "cdw", 1, rng);
  for (auto& e : ps.entries()) {
    if (e.name.ends_with(".b")) e.value = Tensor(e.value.shape());  // impulse response without bias
    if (e.name.ends_with(".w")) e.value = Tensor(e.value.shape(), 0.5);
  }
  const ParamVars pv(ps, false);
  Tensor x({1, 40, 1});
  x[10] = 1.0;
  const Tensor y = cdwconv(pv, "cdw", constant(x)).value();
  for (std::size_t t = 0; t < 40; ++t) {
    const bool inside = t >= 10 && t < 10 + kCdwReceptiveField;
    EXPECT_EQ(y[t] != 0.0, inside) << t;
  }
}

TEST(FreqSSM, ZeroGatesAndBandWeightsReduceToVanillaScan) {
  Rng rng(3);
  ParameterSet ps;
  init_freq_ssm(ps, "fs", 4, 8, rng);
  for (const char* k : {"fs.band_low.w", "fs.band_high.w", "fs.band_low.b", "fs.band_high.b"}) {
    ps.get(k) = Tensor(ps.get(k).shape());
  }
  ASSERT_EQ(ps.get("fs.alpha")[0], 0.0);
  ASSERT_EQ(ps.get("fs.beta")[0], 0.0);
  const Tensor x = rng.normal_tensor({1, 16, 4});
  const ParamVars pv(ps, false);
  const Tensor y = freq_ssm(pv, "fs", constant(x)).value();
  const Tensor ref = vanilla_scan(ps, "fs", x.reshaped({16, 4}), Tensor({4}), nullptr);
  EXPECT_LT(max_abs_diff(y.reshaped({16, 4}), ref), 1e-12);
}

// Step-by-step interpreter of the frequency-modulated SSM for one row.
Tensor freq_ssm_interpreter(const ParameterSet& ps, const std::string& p, const Tensor& x) {
  const std::size_t len = x.dim(0), d = x.dim(1);
  const FreqBands bands = dwt_haar(x);
  const std::size_t half = bands.low.dim(0);
  auto band_conv = [&](const Tensor& band, const std::string& name) {
    const Tensor &w = ps.get(p + "." + name + ".w"), &b = ps.get(p + "." + name + ".b");
    Tensor out({half, d});
    for (std::size_t k = 0; k < half; ++k)
      for (std::size_t c = 0; c < d; ++c) {
        double acc = b[c];
        for (std::size_t j = 0; j < 3 && j <= k; ++j) acc += w[c * 3 + j] * band[(k - j) * d + c];
        out[k * d + c] = acc;
      }
    return out;
  };
  const Tensor fl = band_conv(bands.low, "band_low");
  const Tensor fh = band_conv(bands.high, "band_high");
  const Tensor& wm = ps.get(p + ".band_to_mod.w");
  const double alpha = ps.get(p + ".alpha")[0], beta = ps.get(p + ".beta")[0];
  const auto s = plain_projections(ps, p, x);
  const std::size_t n = s.a.dim(1);
  Tensor y({len, d});
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<long double> h(n, 0.0L);
    for (std::size_t t = 0; t < len; ++t) {
      double ml = 0, mh = 0;
      for (std::size_t j = 0; j < d; ++j) {
        ml += fl[(t / 2) * d + j] * wm[j * d + c];
        mh += fh[(t / 2) * d + j] * wm[j * d + c];
      }
      long double out = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double dt = s.delta[t * d + c];
        // delta * A_n is held at or below the documented clamp.
        const double an = std::min(s.a[c * n + k] + alpha * ml + beta * mh, kModulatedClamp / dt);
        double ab, bb;
        testing::zoh_oracle(an, dt, s.b[t * n + k], ab, bb);
        h[k] = ab * h[k] + static_cast<long double>(bb) * x[t * d + c];
        out += s.c[t * n + k] * h[k];
      }
      y[t * d + c] = static_cast<double>(out);
    }
  }
  const Tensor rec = idwt_haar(FreqBands{fl, fh, len});
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += rec[i];
  return y;
}

TEST(FreqSSM, MatchesStepwiseInterpreter) {
  for (std::size_t len : {8u, 9u}) {
    Rng rng(4 + len);
    ParameterSet ps;
    init_freq_ssm(ps, "fs", 3, 4, rng);
    for (auto& e : ps.entries())
      for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] += 0.05 * rng.normal();
    ps.get("fs.alpha")[0] = 0.4;
    ps.get("fs.beta")[0] = -0.3;
    const Tensor x = rng.normal_tensor({len, 3});
    const ParamVars pv(ps, false);
    const Tensor y = freq_ssm(pv, "fs", constant(x.reshaped({1, len, 3}))).value().reshaped({len, 3});
    EXPECT_LT(max_abs_diff(y, freq_ssm_interpreter(ps, "fs", x)), 1e-11) << len;
  }
}

TEST(FreqSSM, ModulationIsZeroAtInitialization) {
  Rng rng(5);
  ParameterSet ps;
  init_freq_ssm(ps, "fs", 4, 4, rng);
  const ParamVars pv(ps, false);
  const auto tr = freq_ssm_trace(pv, "fs", constant(rng.normal_tensor({2, 8, 4})));
  EXPECT_EQ(max_abs(tr.modulation.value()), 0.0);
  EXPECT_GT(max_abs(tr.m_low.value()), 0.0);
}

TEST(FreqSSM, RejectsLengthOne) {
  Rng rng(6);
  ParameterSet ps;
  init_freq_ssm(ps, "fs", 2, 2, rng);
  const ParamVars pv(ps, false);
  EXPECT_THROW(freq_ssm(pv, "fs", constant(Tensor({1, 1, 2}))), ContractViolation);
}

TEST(TextSSM, ZeroTextWithoutBiasReducesToVanillaScan) {
  Rng rng(7);
  ParameterSet ps;
  init_text_ssm(ps, "ts", 4, 8, 6, rng);
  ps.get("ts.text_proj.b") = Tensor({8});
  const Tensor x = rng.normal_tensor({1, 16, 4});
  const ParamVars pv(ps, false);
  const Tensor y = text_ssm(pv, "ts", constant(x), constant(Tensor({1, 6}))).value();
  const Tensor ref = vanilla_scan(ps, "ts", x.reshaped({16, 4}), ps.get("ts.d_skip"), nullptr);
  EXPECT_LT(max_abs_diff(y.reshaped({16, 4}), ref), 1e-12);
}

TEST(TextSSM, TextShiftsTheOutputMatrix) {
  Rng rng(8);
  ParameterSet ps;
  init_text_ssm(ps, "ts", 3, 4, 5, rng);
  ps.get("ts.text_proj.b") = rng.normal_tensor({4}, 0.2);
  const Tensor x = rng.normal_tensor({1, 10, 3});
  const Tensor text = rng.normal_tensor({1, 5});
  const ParamVars pv(ps, false);
  const Tensor y = text_ssm(pv, "ts", constant(x), constant(text)).value();
  Tensor shift({4});
  const Tensor &w = ps.get("ts.text_proj.w"), &b = ps.get("ts.text_proj.b");
  for (std::size_t k = 0; k < 4; ++k) {
    shift[k] = b[k];
    for (std::size_t e = 0; e < 5; ++e) shift[k] += text[e] * w[e * 4 + k];
  }
  const Tensor ref = vanilla_scan(ps, "ts", x.reshaped({10, 3}), ps.get("ts.d_skip"), &shift);
  EXPECT_LT(max_abs_diff(y.reshaped({10, 3}), ref), 1e-12);
  // Different text, different output.
  const Tensor y2 = text_ssm(pv, "ts", constant(x), constant(rng.normal_tensor({1, 5}))).value();
  EXPECT_GT(max_abs_diff(y, y2), 1e-6);
}

TEST(TextSSM, RejectsWrongTextWidth) {
  Rng rng(9);
  ParameterSet ps;
  init_text_ssm(ps, "ts", 2, 2, 5, rng);
  const ParamVars pv(ps, false);
  EXPECT_THROW(text_ssm(pv, "ts", constant(Tensor({1, 4, 2})), constant(Tensor({1, 4}))), ContractViolation);
}

TEST(TextSSM, TextProjectionReceivesGradient) {
  Rng rng(10);
  ParameterSet ps;
  init_text_ssm(ps, "ts", 3, 4, 5, rng);
  const Tensor x = rng.normal_tensor({1, 8, 3});
  const Tensor text = rng.normal_tensor({1, 5});
  const Tensor r = rng.normal_tensor({1, 8, 3});
  const auto g = gradient(
      [&](const ParamVars& pv) { return weighted_sum(text_ssm(pv, "ts", constant(x), constant(text)), r); }, ps);
  EXPECT_GT(max_abs(g.get("ts.text_proj.w")), 0.0);
}

// The block-level audit, one test per block so failures are attributed.
class BlockGradients : public ::testing::TestWithParam<std::size_t> {};

TEST_P(BlockGradients, MatchFiniteDifferences) {
  auto fixtures = gradcheck_fixtures(77, false);
  ASSERT_LT(GetParam(), fixtures.size());
  auto& fx = fixtures[GetParam()];
  const auto rep = grad_check(fx.loss, fx.params, 1e-4, 1e-8);
  EXPECT_TRUE(rep.passed) << fx.block << ": " << rep.worst_param << " rel " << rep.worst_relative_error;
}

INSTANTIATE_TEST_SUITE_P(Suite, BlockGradients, ::testing::Range<std::size_t>(0, 7));

TEST(BlockGradients, CorruptedAdjointFailsWithNamedParameter) {
  auto fixtures = gradcheck_fixtures(77, true);
  auto& fx = fixtures.back();
  ASSERT_TRUE(fx.expected_to_fail);
  const auto rep = grad_check(fx.loss, fx.params, 1e-4, 1e-8);
  EXPECT_FALSE(rep.passed);
  EXPECT_FALSE(rep.worst_param.empty());
}

// --- denoiser ---------------------------------------------------------------

TEST(Denoiser, ZeroHeadGivesZeroOutputAndShapesHold) {
  const auto cfg = DenoiserConfig::tiny();
  const auto model = Denoiser::create(cfg, 3);
  Rng rng(11);
  const Tensor z = rng.normal_tensor({3, cfg.latent_length, cfg.latent_dim});
  const std::vector<std::size_t> t = {0, 500, 999};
  const Tensor out = model.predict(z, t, rng.normal_tensor({3, cfg.text_dim}));
  EXPECT_EQ(out.shape(), z.shape());
  EXPECT_EQ(max_abs(out), 0.0);
}

TEST(Denoiser, CreationIsDeterministic) {
  const auto cfg = DenoiserConfig::tiny();
  EXPECT_TRUE(Denoiser::create(cfg, 5).params() == Denoiser::create(cfg, 5).params());
  EXPECT_FALSE(Denoiser::create(cfg, 5).params() == Denoiser::create(cfg, 6).params());
}

TEST(Denoiser, RejectsOutOfRangeTimestepAndBadShapes) {
  const auto cfg = DenoiserConfig::tiny();
  const auto model = Denoiser::create(cfg, 3);
  const Tensor z({1, cfg.latent_length, cfg.latent_dim});
  const Tensor text({1, cfg.text_dim});
  EXPECT_THROW(model.predict(z, std::vector<std::size_t>{1000}, text), ContractViolation);
  EXPECT_THROW(model.predict(Tensor({1, cfg.latent_length + 1, cfg.latent_dim}), std::vector<std::size_t>{1}, text),
               ContractViolation);
}

TEST(Denoiser, TimeEmbeddingIsSinusoidal) {
  const Tensor e = time_embedding(0, 8);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(e[i], 0.0);
    EXPECT_DOUBLE_EQ(e[4 + i], 1.0);
  }
  const Tensor e2 = time_embedding(37, 8);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e2[i] * e2[i] + e2[4 + i] * e2[4 + i], 1.0, 1e-14);
}

// Weight surgery: with the middle stage silenced, the decoder sees only the
// encoder skip, and the head sees the decoder output plus the input stem.
TEST(Denoiser, SkipPathsSurviveSilencedMiddleStage) {
  for (bool long_skip : {true, false}) {
    auto cfg = DenoiserConfig::tiny();
    cfg.long_skip = long_skip;
    auto model = Denoiser::create(cfg, 4);
    Rng rng(12);
    for (auto& e : model.params().entries())
      for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] += 0.1 * rng.normal();
    for (const char* k : {"mid.0.freq.out_linear.w", "mid.0.freq.out_linear.b", "mid.0.text.out_linear.w",
                          "mid.0.text.out_linear.b"})
      model.params().get(k) = Tensor(model.params().get(k).shape());
    const Tensor z = rng.normal_tensor({2, cfg.latent_length, cfg.latent_dim});
    const Tensor text = rng.normal_tensor({2, cfg.text_dim});
    const std::vector<std::size_t> t = {3, 700};
    const ParamVars pv(model.params(), false);
    const Var tf = model.time_features(pv, t);
    const Var stem = linear(constant(z), pv["in_proj.w"], pv["in_proj.b"]);
    const Var enc = ftmamba_layer(pv, "enc.0", stem, tf, constant(text), cfg.bidirectional);
    Var dec = ftmamba_layer(pv, "dec.0", enc, tf, constant(text), cfg.bidirectional);
    if (long_skip) dec = add(dec, stem);
    const Tensor want = scale(linear(dec, pv["head.w"], pv["head.b"]), cfg.head_scale).value();
    EXPECT_LT(max_abs_diff(model.predict(z, t, text), want), 1e-13) << long_skip;
  }
}

TEST(Denoiser, ConfigValidation) {
  DenoiserConfig c;
  c.states = 0;
  EXPECT_THROW(c.validate(), ContractViolation);
  c = DenoiserConfig();
  c.latent_length = 15;
  EXPECT_THROW(c.validate(), ContractViolation);
  EXPECT_NO_THROW(DenoiserConfig::full_scale().validate());
}

}  // namespace
}  // namespace ftm
