// Copyright 2026 The Grain Model Authors
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


#include "grain/noise_analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace grain {
namespace {

using testing::Ar1;
using testing::CorrelationRatio;
using testing::DenseToeplitzSolve;
using testing::RandomValidAutocorrelation;
using testing::SeparableGrain;
using testing::WhiteNoise;

double BlockRms(const NoisePlane& p, int beta, int m, int n) {
  double s = 0;
  for (int y = n * beta; y < (n + 1) * beta; ++y) {
    for (int x = m * beta; x < (m + 1) * beta; ++x) s += p.at(x, y) * p.at(x, y);
  }
  return std::sqrt(s / (beta * beta));
}

NoiseLayer MonoLayer(NoisePlane p) {
  NoiseLayer l;
  l.planes.push_back(std::move(p));
  return l;
}

TEST(ExtractNoiseLayer, Examples) {
  Frame in = Frame::Blank(4, 4, ChromaLayout::k420, 128);
  EXPECT_EQ(0.0, ExtractNoiseLayer(in, in).planes[1].at(1, 1));
  Frame base = in;
  in.planes[0].at(1, 2) = 130;
  in.planes[2].at(0, 0) = 0;
  base.planes[2].at(0, 0) = 255;
  const NoiseLayer n = ExtractNoiseLayer(in, base);
  EXPECT_EQ(3u, n.planes.size());
  EXPECT_EQ(2.0, n.planes[0].at(1, 2));
  EXPECT_EQ(-255.0, n.planes[2].at(0, 0));
  EXPECT_THROW(ExtractNoiseLayer(in, Frame::Blank(4, 4, ChromaLayout::k444)),
               Error);
}

TEST(ComputeSde, Examples) {
  NoisePlane p(4, 2, 0.0);
  p.at(0, 0) = 3; p.at(1, 0) = 3; p.at(0, 1) = 3; p.at(1, 1) = 3;
  p.at(2, 0) = 3; p.at(3, 0) = 4;
  const EnergyMap m = ComputeSde(p, 2);
  ASSERT_EQ(2, m.width);
  ASSERT_EQ(1, m.height);
  EXPECT_DOUBLE_EQ(3.0, m.at(0, 0));
  EXPECT_DOUBLE_EQ(2.5, m.at(1, 0));
  EXPECT_EQ(0.0, ComputeSde(NoisePlane(4, 4, 0.0), 2).at(1, 1));
  const EnergyMap hd = ComputeSde(NoisePlane(1920, 1080, 0.0), 30);
  EXPECT_EQ(64, hd.width);
  EXPECT_EQ(36, hd.height);
  EXPECT_THROW(ComputeSde(NoisePlane(16, 16, 1.0), 30), Error);
}

TEST(NormalizeNoise, Examples) {
  NoisePlane p(4, 2, 0.0);
  p.at(2, 0) = 3; p.at(3, 0) = 4;
  const EnergyMap m = ComputeSde(p, 2);
  const NoisePlane n = NormalizeNoise(p, m, 1e-6);
  EXPECT_NEAR(1.0, BlockRms(n, 2, 1, 0), 1e-12);
  EXPECT_EQ(0.0, n.at(0, 0));

  std::mt19937_64 rng(1);
  NoisePlane w(7, 5, WhiteNoise(rng, 35));
  EnergyMap ones(2, {3, 2});
  for (double& v : ones.values) v = 1.0;
  EXPECT_EQ(w, NormalizeNoise(w, ones, 1e-6));  // edge pixels use clamped cells
}

TEST(NormalizeNoise, Idempotent) {
  std::mt19937_64 rng(2);
  NoisePlane p(90, 60, WhiteNoise(rng, 90 * 60, 3.0));
  const NoisePlane once = NormalizeNoise(p, ComputeSde(p, 30), 1e-6);
  const EnergyMap sde = ComputeSde(once, 30);
  for (double v : sde.values) EXPECT_NEAR(1.0, v, 1e-12);
  const NoisePlane twice = NormalizeNoise(once, sde, 1e-6);
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_NEAR(once.samples()[i], twice.samples()[i], 1e-9);
  }
}

TEST(Concat, RowAndColumnOrder) {
  NoisePlane p(2, 2, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ((std::vector<double>{1, 2, 3, 4}), ConcatRows(p));
  EXPECT_EQ((std::vector<double>{1, 3, 2, 4}), ConcatCols(p));
  NoisePlane line(1, 4, std::vector<double>{5, 6, 7, 8});
  EXPECT_EQ(ConcatRows(line), ConcatCols(line));
  EXPECT_EQ(p, FromCols(ConcatCols(p), 2, 2));
  EXPECT_EQ(p, FromRows(ConcatRows(p), 2, 2));
}

TEST(Autocorrelation, Examples) {
  const std::vector<double> impulse{1, 0, 0, 0};
  EXPECT_EQ((std::vector<double>{0.25, 0.0}), Autocorrelation(impulse, 1));
  EXPECT_THROW(Autocorrelation(impulse, 4), Error);

  std::mt19937_64 rng(3);
  const auto white = WhiteNoise(rng, 20000);
  const auto rho = Autocorrelation(white, 5);
  EXPECT_NEAR(1.0, rho[0], 0.05);
  for (int k = 1; k <= 5; ++k) EXPECT_LE(std::abs(rho[k]), 0.05);

  const auto ar = Ar1(rng, 50000, 0.9);
  const auto rr = Autocorrelation(ar, 4);
  for (int k = 1; k <= 4; ++k) {
    EXPECT_NEAR(std::pow(0.9, k), rr[k] / rr[0], 0.05);
    EXPECT_GE(rr[0], std::abs(rr[k]));
  }
}

TEST(LevinsonDurbin, ClosedForms) {
  const SpectralEnvelope e = LevinsonDurbin(std::vector<double>{1.0, 0.9});
  EXPECT_DOUBLE_EQ(0.9, e.a[0]);
  EXPECT_DOUBLE_EQ(0.9, e.reflection[0]);
  const SpectralEnvelope flat =
      LevinsonDurbin(std::vector<double>{1, 0, 0, 0, 0});
  for (double v : flat.a) EXPECT_EQ(0.0, v);
  for (double v : flat.reflection) EXPECT_EQ(0.0, v);
}

TEST(LevinsonDurbin, Errors) {
  try {
    LevinsonDurbin(std::vector<double>{0.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kDegenerateSignal, e.code());
  }
  try {
    LevinsonDurbin(std::vector<double>{1.0, 1.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kUnstable, e.code());
  }
}

TEST(LevinsonDurbin, MatchesDenseSolve) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int p = 1 + trial % 10;
    const auto rho = RandomValidAutocorrelation(rng, p);
    const SpectralEnvelope e = LevinsonDurbin(rho);
    const auto dense = DenseToeplitzSolve(rho);
    for (int k = 0; k < p; ++k) EXPECT_NEAR(dense[k], e.a[k], 1e-9);
    for (double r : e.reflection) EXPECT_LT(std::abs(r), 1.0);
    // Step-up recursion agrees with the solver's weights.
    const auto a = ReflectionToPredictor(e.reflection);
    for (int k = 0; k < p; ++k) EXPECT_NEAR(e.a[k], a[k], 1e-12);
  }
}

TEST(Lar, Examples) {
  EXPECT_EQ(0.0, ToLar(0.0));
  EXPECT_NEAR(-std::log(3.0), ToLar(0.5), 1e-15);
  EXPECT_NEAR(std::log(3.0), ToLar(-0.5), 1e-15);
  EXPECT_THROW(ToLar(1.0), Error);
  EXPECT_THROW(ToLar(-1.2), Error);
  for (double r = -0.999; r < 0.999; r += 0.001) {
    EXPECT_NEAR(r, FromLar(ToLar(r)), 1e-12);
  }
}

TEST(EstimateEnvelope, DegenerateAndPredictable) {
  const SpectralEnvelope zero = EstimateEnvelope(std::vector<double>(100, 0.0), 4);
  EXPECT_EQ(SpectralEnvelope::Identity(4).a, zero.a);
  const SpectralEnvelope dc = EstimateEnvelope(std::vector<double>(100, 1.0), 3);
  for (double r : dc.reflection) EXPECT_LE(std::abs(r), kMaxReflection);
  for (double l : dc.lar) EXPECT_TRUE(std::isfinite(l));
}

TEST(AnalyzeFrame, ZeroLayerGivesIdentity) {
  const FrameNoiseModel m =
      AnalyzeFrame(MonoLayer(NoisePlane(60, 60, 0.0)), ModelConfig{});
  ASSERT_EQ(1u, m.channels.size());
  for (double v : m.channels[0].sde.values) EXPECT_EQ(0.0, v);
  for (double r : m.channels[0].horizontal.reflection) EXPECT_EQ(0.0, r);
  for (double r : m.channels[0].vertical.reflection) EXPECT_EQ(0.0, r);
}

TEST(AnalyzeFrame, ScaleCovariance) {
  std::mt19937_64 rng(5);
  const NoisePlane p = SeparableGrain(rng, 120, 90, 0.5, 0.2, 30,
                                      [](int m, int n) { return 1.0 + m + n; });
  NoisePlane scaled = p;
  for (double& v : scaled.samples()) v *= 3.5;
  const ModelConfig cfg;
  const auto a = AnalyzeFrame(MonoLayer(p), cfg).channels[0];
  const auto b = AnalyzeFrame(MonoLayer(scaled), cfg).channels[0];
  for (std::size_t i = 0; i < a.sde.values.size(); ++i) {
    EXPECT_NEAR(3.5 * a.sde.values[i], b.sde.values[i], 1e-12 * b.sde.values[i]);
  }
  for (int k = 0; k < cfg.order; ++k) {
    EXPECT_NEAR(a.horizontal.reflection[k], b.horizontal.reflection[k], 1e-9);
    EXPECT_NEAR(a.vertical.reflection[k], b.vertical.reflection[k], 1e-9);
  }
}

TEST(AnalyzeFrame, RecoversSeparableGrain) {
  std::mt19937_64 rng(6);
  const NoisePlane p =
      SeparableGrain(rng, 512, 512, 0.6, 0.0, 30, [](int, int) { return 1.0; });
  const auto model = AnalyzeFrame(MonoLayer(p), ModelConfig{}).channels[0];
  const auto raw = LevinsonDurbin(Autocorrelation(ConcatRows(p), 10));
  EXPECT_NEAR(raw.reflection[0], model.horizontal.reflection[0], 0.05);
  EXPECT_NEAR(0.6, model.horizontal.reflection[0], 0.05);
  EXPECT_LE(std::abs(model.vertical.reflection[0]), 0.05);
}

TEST(AnalyzeFrame, RecoversEnergyMap) {
  std::mt19937_64 rng(7);
  auto sigma = [](int m, int n) { return 0.5 + 0.3 * m + 0.2 * ((m + 2 * n) % 5); };
  const NoisePlane p = SeparableGrain(rng, 510, 510, 0.0, 0.0, 30, sigma);
  const EnergyMap sde = ComputeSde(p, 30);
  for (int n = 0; n < sde.height; ++n) {
    for (int m = 0; m < sde.width; ++m) {
      EXPECT_NEAR(sigma(m, n), sde.at(m, n), 0.1 * sigma(m, n));
    }
  }
}

TEST(AnalyzeFrame, ChromaBlocksFollowWidthRatio) {
  NoiseLayer l;
  l.layout = ChromaLayout::k420;
  l.planes = {NoisePlane(120, 60, 1.0), NoisePlane(60, 30, 1.0),
              NoisePlane(60, 30, 1.0)};
  const FrameNoiseModel m = AnalyzeFrame(l, ModelConfig{});
  EXPECT_EQ(30, m.channels[0].sde.beta);
  EXPECT_EQ(15, m.channels[1].sde.beta);
  EXPECT_EQ(4, m.channels[1].sde.width);
  EXPECT_EQ(2, m.channels[1].sde.height);
}

}  // namespace
}  // namespace grain
