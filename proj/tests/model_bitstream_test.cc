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


#include "grain/model_bitstream.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace grain {
namespace {

ModelStream RandomStream(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h,
                         ChromaLayout layout, int beta, int order, int frames) {
  ModelStream s;
  s.header.width = w;
  s.header.height = h;
  s.header.layout = layout;
  s.header.beta = static_cast<std::uint16_t>(beta);
  s.header.order = static_cast<std::uint8_t>(order);
  s.header.frame_count = static_cast<std::uint32_t>(frames);
  s.header.has_seed = rng() & 1;
  s.header.seed = s.header.has_seed ? rng() : 0;
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_real_distribution<float> scale(0.0f, 40.0f);
  for (int f = 0; f < frames; ++f) {
    QuantizedFrameModel fm;
    for (const ChannelGeometry& g : StreamChannelGeometry(s.header)) {
      QuantizedChannelModel c;
      for (int k = 0; k < order; ++k) {
        c.horizontal.codes.push_back(static_cast<std::uint8_t>(byte(rng)));
        c.vertical.codes.push_back(static_cast<std::uint8_t>(byte(rng)));
      }
      c.sde.width = g.grid.width;
      c.sde.height = g.grid.height;
      c.sde.scale = scale(rng);
      for (int i = 0; i < g.grid.width * g.grid.height; ++i) {
        c.sde.codes.push_back(static_cast<std::uint8_t>(byte(rng)));
      }
      fm.channels.push_back(c);
    }
    s.frames.push_back(fm);
  }
  return s;
}

ErrorCode CodeOf(const std::vector<std::uint8_t>& bytes) {
  try {
    Deserialize(bytes);
  } catch (const Error& e) {
    EXPECT_TRUE(e.offset().has_value());
    return e.code();
  }
  ADD_FAILURE() << "expected a format error";
  return ErrorCode::kIo;
}

TEST(QuantizeLar, Examples) {
  EXPECT_EQ(128, QuantizeLar(0.0, 8.0));
  EXPECT_DOUBLE_EQ(0.03125, DequantizeLar(128, 8.0));
  EXPECT_EQ(255, QuantizeLar(8.0, 8.0));
  EXPECT_EQ(0, QuantizeLar(-9.0, 8.0));
  EXPECT_DOUBLE_EQ(-7.96875, DequantizeLar(0, 8.0));
  EXPECT_THROW(QuantizeLar(0.0, 0.0), Error);
}

TEST(QuantizeLar, ErrorBoundAndIdempotence) {
  const double step = LarStep(8.0);
  for (double R = -7.999; R < 8.0; R += 0.0137) {
    EXPECT_LE(std::abs(R - DequantizeLar(QuantizeLar(R, 8.0), 8.0)),
              step / 2 + 1e-15);
  }
  for (int c = 0; c < 256; ++c) {
    const auto code = static_cast<std::uint8_t>(c);
    EXPECT_EQ(code, QuantizeLar(DequantizeLar(code, 8.0), 8.0));
    const double r = FromLar(DequantizeLar(code, 8.0));
    EXPECT_LT(std::abs(r), 1.0);
    EXPECT_LE(std::abs(r), std::tanh(4.0) * (1 + 1e-12));
  }
}

TEST(QuantizeSde, Examples) {
  EnergyMap zero(30, {3, 1});
  const QuantizedEnergyMap qz = QuantizeSde(zero);
  EXPECT_EQ(0.0f, qz.scale);
  EXPECT_EQ(zero, DequantizeSde(qz, 30));

  EnergyMap single(30, {1, 1});
  single.values = {5.1};
  const QuantizedEnergyMap qs = QuantizeSde(single);
  EXPECT_EQ(255, qs.codes[0]);
  EXPECT_NEAR(5.1, DequantizeSde(qs, 30).values[0], 5.1 * 1e-7);  // float32 scale

  EnergyMap three(30, {3, 1});
  three.values = {0, 2.55, 5.1};
  const QuantizedEnergyMap q3 = QuantizeSde(three);
  EXPECT_EQ((std::vector<std::uint8_t>{0, 128, 255}), q3.codes);
  const EnergyMap d3 = DequantizeSde(q3, 30);
  EXPECT_NEAR(2.56, d3.values[1], 1e-6);
  for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(d3.values[i] - three.values[i]), 0.01);
}

TEST(Serialize, HdPayloadSize) {
  std::mt19937_64 rng(1);
  ModelStream s = RandomStream(rng, 1920, 1080, ChromaLayout::kMono, 30, 10, 2);
  s.header.has_seed = false;
  EXPECT_EQ(2328u, FramePayloadBytes(s.header));
  const auto bytes = Serialize(s);
  EXPECT_EQ(4 + 1 + 16 + 1 + 2 + 1 + 1 + 4 + 2 * 2328u, bytes.size());
  EXPECT_EQ('P', bytes[0]);
  EXPECT_EQ(1, bytes[4]);
  EXPECT_EQ(0x80, bytes[5]);  // width 1920 = 0x0780, little-endian
  EXPECT_EQ(0x07, bytes[6]);
}

TEST(Serialize, RoundTripIsByteIdentical) {
  std::mt19937_64 rng(2);
  const ChromaLayout layouts[] = {ChromaLayout::kMono, ChromaLayout::k420,
                                  ChromaLayout::k444};
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<std::uint32_t> dim(8, 200);
    const int beta = 2 + static_cast<int>(rng() % 20);
    const ModelStream s = RandomStream(
        rng, std::max<std::uint32_t>(dim(rng), beta * 2),
        std::max<std::uint32_t>(dim(rng), beta * 2), layouts[trial % 3], beta,
        1 + static_cast<int>(rng() % 32), static_cast<int>(rng() % 4));
    const auto bytes = Serialize(s);
    const ModelStream back = Deserialize(bytes);
    EXPECT_EQ(s, back);
    EXPECT_EQ(bytes, Serialize(back));
  }
}

TEST(Deserialize, DistinctErrors) {
  std::mt19937_64 rng(3);
  const auto good =
      Serialize(RandomStream(rng, 64, 64, ChromaLayout::kMono, 30, 4, 3));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(ErrorCode::kBadMagic, CodeOf(bad_magic));
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(ErrorCode::kVersionMismatch, CodeOf(bad_version));
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(ErrorCode::kTrailingData, CodeOf(trailing));
  auto flags = good;
  flags[25] = 4;
  EXPECT_EQ(ErrorCode::kMalformedHeader, CodeOf(flags));
  EXPECT_EQ(ErrorCode::kTruncated, CodeOf({'P', 'N'}));

  auto cut = good;
  cut.resize(good.size() - 10);
  try {
    Deserialize(cut);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kTruncated, e.code());
    EXPECT_NE(std::string::npos, std::string(e.what()).find("frame 2"));
  }
}

TEST(Serialize, RejectsInconsistentModels) {
  std::mt19937_64 rng(4);
  ModelStream s = RandomStream(rng, 64, 64, ChromaLayout::kMono, 30, 4, 1);
  ModelStream wrong_count = s;
  wrong_count.header.frame_count = 2;
  EXPECT_THROW(Serialize(wrong_count), Error);
  ModelStream zero_scale = s;
  zero_scale.frames[0].channels[0].sde.scale = 0.0f;
  zero_scale.frames[0].channels[0].sde.codes[0] = 1;
  EXPECT_THROW(Serialize(zero_scale), Error);
  ModelStream short_env = s;
  short_env.frames[0].channels[0].horizontal.codes.pop_back();
  EXPECT_THROW(Serialize(short_env), Error);
}

TEST(Bitrate, SeExamples) {
  EXPECT_DOUBLE_EQ(4.8, SeBitrateKbps(10, 1, 30, 1));
  EXPECT_DOUBLE_EQ(9.6, SeBitrateKbps(10, 1, 60, 1));
  EXPECT_DOUBLE_EQ(8.0, SeBitrateKbps(10, 1, 50, 1));
  EXPECT_DOUBLE_EQ(3.84, SeBitrateKbps(10, 1, 24, 1));
  EXPECT_DOUBLE_EQ(24.0, SeBitrateKbps(10, 3, 50, 1));
  EXPECT_THROW(SeBitrateKbps(0, 1, 30, 1), Error);
}

TEST(Bitrate, ModelReport) {
  std::mt19937_64 rng(5);
  ModelStream s = RandomStream(rng, 1920, 1080, ChromaLayout::kMono, 30, 10, 3);
  s.header.fps_num = 24;
  const BitrateReport r = ModelBitrateReport(s);
  EXPECT_DOUBLE_EQ(3.84, r.se_kbps);
  EXPECT_NEAR(2308 * 8 * 24 / 1000.0, r.sde_kbps, 1e-9);
  EXPECT_NEAR(r.se_kbps + r.sde_kbps, r.total_kbps, 1e-12);

  ModelStream empty = s;
  empty.frames.clear();
  empty.header.frame_count = 0;
  const BitrateReport z = ModelBitrateReport(empty);
  EXPECT_EQ(0.0, z.se_kbps);
  EXPECT_EQ(0.0, z.sde_kbps);
  EXPECT_EQ(0.0, z.total_kbps);
}

TEST(DequantizeFrameModel, StableEnvelopes) {
  std::mt19937_64 rng(6);
  const ModelStream s = RandomStream(rng, 96, 64, ChromaLayout::k420, 30, 10, 1);
  const FrameNoiseModel m = DequantizeFrameModel(
      s.frames[0], StreamChannelGeometry(s.header), kStreamLarRange);
  ASSERT_EQ(3u, m.channels.size());
  EXPECT_EQ(15, m.channels[1].sde.beta);
  for (const auto& c : m.channels) {
    for (double r : c.horizontal.reflection) EXPECT_LT(std::abs(r), 1.0);
    for (double r : c.vertical.reflection) EXPECT_LT(std::abs(r), 1.0);
  }
}

}  // namespace
}  // namespace grain
