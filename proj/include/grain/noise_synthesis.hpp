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

// Decoder-side noise synthesis: seeded white Gaussian noise, all-pole shaping
// along the concatenated rows and then the concatenated columns, per-block
// energy scaling, and recombination with the base layer.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "grain/core_types.hpp"
#include "grain/noise_analysis.hpp"

namespace grain {

// -----------------------------------------------------------------------------
// Seeding and the Gaussian source
//
// Stream seeds:
//   s = Mix64(master_seed)
//   s = Mix64(s ^ frame_index)
//   s = Mix64(s ^ (channel_index + 1))
// Mix64 is the SplitMix64 output function (golden-ratio increment followed by
// the 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB finalizer).
//
// Samples: xorshift64* (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D)
// seeded with the stream seed (a zero seed is replaced by the golden-ratio
// constant). Each output gives a uniform u = ((x >> 11) + 0.5) * 2^-53 in
// (0, 1); Box-Muller turns consecutive pairs (u1, u2) into two normals,
// sqrt(-2 ln u1) * cos(2 pi u2) first, then the sine term.

inline constexpr std::uint64_t Mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t StreamSeed(std::uint64_t master_seed,
                                          std::uint64_t frame_index,
                                          std::uint64_t channel_index) {
  std::uint64_t s = Mix64(master_seed);
  s = Mix64(s ^ frame_index);
  return Mix64(s ^ (channel_index + 1));
}

class XorShift64Star {
 public:
  explicit constexpr XorShift64Star(std::uint64_t seed)
      : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

  constexpr std::uint64_t Next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
  }

  /// Uniform in the open interval (0, 1).
  double NextUniform() {
    return (static_cast<double>(Next() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

inline NoisePlane GaussianPlane(int width, int height,
                                std::uint64_t stream_seed) {
  NoisePlane out(width, height);
  XorShift64Star rng(stream_seed);
  auto& s = out.samples();
  for (std::size_t i = 0; i < s.size(); i += 2) {
    const double u1 = rng.NextUniform();
    const double u2 = rng.NextUniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    s[i] = radius * std::cos(angle);
    if (i + 1 < s.size()) s[i + 1] = radius * std::sin(angle);
  }
  return out;
}

// -----------------------------------------------------------------------------
// Spectral shaping

/// All-pole filter y(k) = x(k) + sum_j a_j y(k - j), zero initial state.
inline std::vector<double> IirFilter1d(std::span<const double> x,
                                       std::span<const double> a) {
  std::vector<double> y(x.size());
  const std::size_t p = a.size();
  for (std::size_t k = 0; k < x.size(); ++k) {
    double acc = x[k];
    const std::size_t taps = std::min(p, k);
    for (std::size_t j = 1; j <= taps; ++j) acc += a[j - 1] * y[k - j];
    y[k] = acc;
  }
  return y;
}

/// Filters the row-concatenated signal with the horizontal envelope, then the
/// column-concatenated result with the vertical one. State carries across
/// row and column boundaries.
inline NoisePlane ShapeNoise(const NoisePlane& plane,
                             const SpectralEnvelope& horizontal,
                             const SpectralEnvelope& vertical) {
  const int w = plane.width();
  const int h = plane.height();
  NoisePlane rows = FromRows(IirFilter1d(ConcatRows(plane), horizontal.a), w, h);
  return FromCols(IirFilter1d(ConcatCols(rows), vertical.a), w, h);
}

/// Rescales every energy-map block of `shaped` to unit RMS and then to the
/// block's map value. Pixels past the last full block follow their clamped
/// cell's gain; blocks whose RMS is below `epsilon` become zero.
inline NoisePlane ApplySde(const NoisePlane& shaped, const EnergyMap& map,
                           double epsilon) {
  CheckMapCoversPlane(shaped, map);
  const int beta = map.beta;
  std::vector<double> gain(map.values.size(), 0.0);
  for (int n = 0; n < map.height; ++n) {
    for (int m = 0; m < map.width; ++m) {
      double sum = 0.0;
      for (int y = n * beta; y < (n + 1) * beta; ++y) {
        for (int x = m * beta; x < (m + 1) * beta; ++x) {
          sum += shaped.at(x, y) * shaped.at(x, y);
        }
      }
      const double rms = std::sqrt(sum / (static_cast<double>(beta) * beta));
      gain[static_cast<std::size_t>(n) * map.width + m] =
          rms < epsilon ? 0.0 : map.at(m, n) / rms;
    }
  }
  NoisePlane out(shaped.width(), shaped.height());
  for (int y = 0; y < shaped.height(); ++y) {
    const std::size_t row = static_cast<std::size_t>(map.cell_y(y)) * map.width;
    for (int x = 0; x < shaped.width(); ++x) {
      out.at(x, y) = shaped.at(x, y) * gain[row + map.cell_x(x)];
    }
  }
  return out;
}

/// Synthesizes one frame's noise layer from a decoded model. Channel c of
/// frame f draws from StreamSeed(master_seed, f, c).
inline NoiseLayer SynthesizeFrame(const FrameNoiseModel& model, int width,
                                  int height, ChromaLayout layout,
                                  std::uint64_t master_seed,
                                  std::uint64_t frame_index,
                                  double epsilon = 1e-6) {
  const auto dims = PlaneGeometry(width, height, layout);
  if (dims.size() != model.channels.size()) {
    throw Error(ErrorCode::kGeometry,
                "model has " + std::to_string(model.channels.size()) +
                    " channels, frame layout needs " +
                    std::to_string(dims.size()));
  }
  NoiseLayer layer;
  layer.layout = layout;
  for (std::size_t c = 0; c < dims.size(); ++c) {
    const ChannelNoiseModel& ch = model.channels[c];
    const NoisePlane white = GaussianPlane(
        dims[c].width, dims[c].height, StreamSeed(master_seed, frame_index, c));
    const NoisePlane shaped = ShapeNoise(white, ch.horizontal, ch.vertical);
    layer.planes.push_back(ApplySde(shaped, ch.sde, epsilon));
  }
  return layer;
}

/// out = clamp(round(base + noise), 0, 255) per sample.
inline Frame Recombine(const Frame& base, const NoiseLayer& noise) {
  if (base.planes.size() != noise.planes.size()) {
    throw Error(ErrorCode::kGeometry, "noise layer channel count differs");
  }
  Frame out;
  out.layout = base.layout;
  for (std::size_t c = 0; c < base.planes.size(); ++c) {
    const Plane& b = base.planes[c];
    const NoisePlane& n = noise.planes[c];
    if (!b.same_geometry(n)) {
      throw Error(ErrorCode::kGeometry, "noise plane size differs from base");
    }
    Plane p(b.width(), b.height());
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double v = std::round(static_cast<double>(b.samples()[i]) + n.samples()[i]);
      p.samples()[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    out.planes.push_back(std::move(p));
  }
  return out;
}

}  // namespace grain
