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

// Encoder-side noise model.
//
// A noise layer N = I - V is described per frame and channel by
//  * an energy map: the RMS of N over non-overlapping beta x beta blocks, and
//  * two spectral envelopes: order-p all-pole predictors fitted by
//    Levinson-Durbin to the energy-normalized layer read row after row
//    (horizontal) and column after column (vertical).
// Envelopes are carried as reflection coefficients and log-area ratios
// R = ln((1 - r) / (1 + r)).

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "grain/core_types.hpp"

namespace grain {

struct NoiseLayer {
  ChromaLayout layout = ChromaLayout::kMono;
  std::vector<NoisePlane> planes;
};

/// Per-block RMS of one noise plane. Cell (m, n) covers columns
/// [m*beta, (m+1)*beta) and rows [n*beta, (n+1)*beta).
struct EnergyMap {
  int beta = 0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  EnergyMap() = default;
  EnergyMap(int block, GridDims dims)
      : beta(block),
        width(dims.width),
        height(dims.height),
        values(static_cast<std::size_t>(dims.width) * dims.height, 0.0) {}

  double& at(int m, int n) {
    return values[static_cast<std::size_t>(n) * width + m];
  }
  double at(int m, int n) const {
    return values[static_cast<std::size_t>(n) * width + m];
  }
  /// Cell holding pixel (x, y); pixels past the last full block map to the
  /// nearest cell.
  int cell_x(int x) const { return std::min(x / beta, width - 1); }
  int cell_y(int y) const { return std::min(y / beta, height - 1); }

  friend bool operator==(const EnergyMap&, const EnergyMap&) = default;
};

/// Order-p predictor S(k) ~ sum_j a_j S(k - j), kept in three equivalent
/// parameterizations.
struct SpectralEnvelope {
  std::vector<double> a;           // prediction weights a_1..a_p
  std::vector<double> reflection;  // PARCOR r_1..r_p, |r| < 1
  std::vector<double> lar;         // R_1..R_p

  int order() const { return static_cast<int>(a.size()); }

  static SpectralEnvelope Identity(int order);
  static SpectralEnvelope FromReflection(std::span<const double> r);
  static SpectralEnvelope FromLar(std::span<const double> lar);
};

struct ChannelNoiseModel {
  EnergyMap sde;
  SpectralEnvelope horizontal;
  SpectralEnvelope vertical;
};

struct FrameNoiseModel {
  std::vector<ChannelNoiseModel> channels;
};

// -----------------------------------------------------------------------------
// Layer decomposition, energy map, normalization

inline NoiseLayer ExtractNoiseLayer(const Frame& input, const Frame& base) {
  if (!input.same_geometry(base)) {
    throw Error(ErrorCode::kGeometry,
                "input and base frames differ in geometry");
  }
  NoiseLayer layer;
  layer.layout = input.layout;
  for (std::size_t c = 0; c < input.planes.size(); ++c) {
    const Plane& i = input.planes[c];
    const Plane& v = base.planes[c];
    NoisePlane n(i.width(), i.height());
    for (std::size_t k = 0; k < i.size(); ++k) {
      n.samples()[k] = static_cast<double>(i.samples()[k]) - static_cast<double>(v.samples()[k]);
    }
    layer.planes.push_back(std::move(n));
  }
  return layer;
}

/// True RMS (mean over the beta^2 block) per full block.
inline EnergyMap ComputeSde(const NoisePlane& noise, int beta) {
  EnergyMap map(beta, SdeGridDims(noise.width(), noise.height(), beta));
  const double inv_count = 1.0 / (static_cast<double>(beta) * beta);
  for (int n = 0; n < map.height; ++n) {
    for (int m = 0; m < map.width; ++m) {
      double sum = 0.0;
      for (int y = n * beta; y < (n + 1) * beta; ++y) {
        for (int x = m * beta; x < (m + 1) * beta; ++x) {
          const double v = noise.at(x, y);
          sum += v * v;
        }
      }
      map.at(m, n) = std::sqrt(sum * inv_count);
    }
  }
  return map;
}

inline void CheckMapCoversPlane(const NoisePlane& plane, const EnergyMap& map) {
  if (map.beta < 1 ||
      !(SdeGridDims(plane.width(), plane.height(), map.beta) ==
        GridDims{map.width, map.height}) ||
      map.values.size() != static_cast<std::size_t>(map.width) * map.height) {
    throw Error(ErrorCode::kGeometry,
                "energy map does not match a " + std::to_string(plane.width()) +
                    "x" + std::to_string(plane.height()) + " plane");
  }
}

/// Divides every sample by its cell's energy, guarded by `epsilon`.
inline NoisePlane NormalizeNoise(const NoisePlane& noise, const EnergyMap& map,
                                 double epsilon) {
  CheckMapCoversPlane(noise, map);
  NoisePlane out(noise.width(), noise.height());
  for (int y = 0; y < noise.height(); ++y) {
    const int n = map.cell_y(y);
    for (int x = 0; x < noise.width(); ++x) {
      out.at(x, y) = noise.at(x, y) / std::max(map.at(map.cell_x(x), n), epsilon);
    }
  }
  return out;
}

// -----------------------------------------------------------------------------
// Directional signals

template <typename T>
std::vector<T> ConcatRows(const BasicPlane<T>& plane) {
  return plane.samples();
}

template <typename T>
std::vector<T> ConcatCols(const BasicPlane<T>& plane) {
  std::vector<T> out;
  out.reserve(plane.size());
  for (int x = 0; x < plane.width(); ++x) {
    for (int y = 0; y < plane.height(); ++y) out.push_back(plane.at(x, y));
  }
  return out;
}

/// Inverse of ConcatRows / ConcatCols.
template <typename T>
BasicPlane<T> FromRows(std::vector<T> signal, int width, int height) {
  return BasicPlane<T>(width, height, std::move(signal));
}

template <typename T>
BasicPlane<T> FromCols(const std::vector<T>& signal, int width, int height) {
  BasicPlane<T> out(width, height);
  std::size_t k = 0;
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) out.at(x, y) = signal[k++];
  }
  return out;
}

// -----------------------------------------------------------------------------
// Linear prediction

/// Biased autocorrelation estimate rho(k) = (1/L) sum_i s(i) s(i+k), k = 0..p.
inline std::vector<double> Autocorrelation(std::span<const double> signal,
                                           int order) {
  if (order < 0 || signal.size() <= static_cast<std::size_t>(order)) {
    throw Error(ErrorCode::kInvalidArgument,
                "signal of length " + std::to_string(signal.size()) +
                    " is too short for order " + std::to_string(order));
  }
  const std::size_t n = signal.size();
  std::vector<double> lags(static_cast<std::size_t>(order) + 1, 0.0);
  for (std::size_t k = 0; k < lags.size(); ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) sum += signal[i] * signal[i + k];
    lags[k] = sum / static_cast<double>(n);
  }
  return lags;
}

inline double ToLar(double r) {
  if (!(std::abs(r) < 1.0)) {
    throw Error(ErrorCode::kUnstable,
                "reflection coefficient " + std::to_string(r) +
                    " outside (-1, 1)");
  }
  return std::log((1.0 - r) / (1.0 + r));
}

inline double FromLar(double lar) {
  // (1 - e^R) / (1 + e^R) == -tanh(R / 2), which stays accurate for large |R|.
  return -std::tanh(0.5 * lar);
}

/// Step-up recursion: reflection coefficients to prediction weights.
inline std::vector<double> ReflectionToPredictor(std::span<const double> r) {
  std::vector<double> a;
  a.reserve(r.size());
  std::vector<double> prev;
  for (std::size_t i = 0; i < r.size(); ++i) {
    prev = a;
    a.push_back(r[i]);
    for (std::size_t j = 0; j < i; ++j) a[j] = prev[j] - r[i] * prev[i - 1 - j];
  }
  return a;
}

inline SpectralEnvelope SpectralEnvelope::Identity(int order) {
  SpectralEnvelope e;
  e.a.assign(static_cast<std::size_t>(order), 0.0);
  e.reflection = e.a;
  e.lar = e.a;
  return e;
}

inline SpectralEnvelope SpectralEnvelope::FromReflection(
    std::span<const double> r) {
  SpectralEnvelope e;
  e.reflection.assign(r.begin(), r.end());
  for (double k : r) e.lar.push_back(ToLar(k));
  e.a = ReflectionToPredictor(r);
  return e;
}

inline SpectralEnvelope SpectralEnvelope::FromLar(std::span<const double> lar) {
  std::vector<double> r;
  r.reserve(lar.size());
  for (double R : lar) r.push_back(grain::FromLar(R));
  SpectralEnvelope e;
  e.reflection = std::move(r);
  e.lar.assign(lar.begin(), lar.end());
  e.a = ReflectionToPredictor(e.reflection);
  return e;
}

/// Levinson-Durbin solve of the Toeplitz normal equations for lags
/// rho(0..p). Throws kDegenerateSignal when rho(0) <= 0 and kUnstable when a
/// reflection coefficient reaches magnitude 1.
inline SpectralEnvelope LevinsonDurbin(std::span<const double> lags) {
  if (lags.empty() || !(lags[0] > 0.0)) {
    throw Error(ErrorCode::kDegenerateSignal,
                "zero-lag autocorrelation must be positive");
  }
  const std::size_t p = lags.size() - 1;
  SpectralEnvelope e;
  e.a.reserve(p);
  e.reflection.reserve(p);
  double error = lags[0];
  std::vector<double> prev;
  for (std::size_t i = 0; i < p; ++i) {
    double acc = lags[i + 1];
    for (std::size_t j = 0; j < i; ++j) acc -= e.a[j] * lags[i - j];
    const double k = acc / error;
    if (!(std::abs(k) < 1.0)) {
      throw Error(ErrorCode::kUnstable,
                  "reflection coefficient " + std::to_string(k) + " at step " +
                      std::to_string(i + 1));
    }
    prev = e.a;
    e.a.push_back(k);
    for (std::size_t j = 0; j < i; ++j) e.a[j] = prev[j] - k * prev[i - 1 - j];
    e.reflection.push_back(k);
    error *= 1.0 - k * k;
  }
  for (double k : e.reflection) e.lar.push_back(ToLar(k));
  return e;
}

// -----------------------------------------------------------------------------
// Frame analysis

inline constexpr double kMaxReflection = 0.999;

/// LPC envelope of one directional signal. All-zero signals give the identity
/// envelope; reflection coefficients are clamped to +-kMaxReflection.
inline SpectralEnvelope EstimateEnvelope(std::span<const double> signal,
                                         int order) {
  std::vector<double> lags = Autocorrelation(signal, order);
  if (!(lags[0] > 0.0)) return SpectralEnvelope::Identity(order);
  SpectralEnvelope raw;
  try {
    raw = LevinsonDurbin(lags);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUnstable) throw;
    // Perfectly predictable input (|r| = 1): retry with a tiny white-noise
    // floor on the zero lag.
    lags[0] *= 1.0 + 1e-9;
    raw = LevinsonDurbin(lags);
  }
  for (double& r : raw.reflection) {
    r = std::clamp(r, -kMaxReflection, kMaxReflection);
  }
  return SpectralEnvelope::FromReflection(raw.reflection);
}

inline ChannelNoiseModel AnalyzePlane(const NoisePlane& noise, int beta,
                                      const ModelConfig& cfg) {
  ChannelNoiseModel model;
  model.sde = ComputeSde(noise, beta);
  const NoisePlane normalized =
      NormalizeNoise(noise, model.sde, cfg.sde_epsilon);
  model.horizontal = EstimateEnvelope(ConcatRows(normalized), cfg.order);
  model.vertical = EstimateEnvelope(ConcatCols(normalized), cfg.order);
  return model;
}

/// Block size used for plane `c` of a layer; chroma scales with the plane
/// width ratio.
inline int PlaneBeta(int beta, int luma_width, int plane_width) {
  return ChromaBeta(beta, luma_width, plane_width);
}

inline FrameNoiseModel AnalyzeFrame(const NoiseLayer& noise,
                                    const ModelConfig& cfg) {
  cfg.Validate();
  if (noise.planes.empty()) {
    throw Error(ErrorCode::kGeometry, "noise layer has no planes");
  }
  FrameNoiseModel model;
  const int luma_w = noise.planes[0].width();
  for (const NoisePlane& plane : noise.planes) {
    model.channels.push_back(AnalyzePlane(
        plane, PlaneBeta(cfg.beta, luma_w, plane.width()), cfg));
  }
  return model;
}

}  // namespace grain
