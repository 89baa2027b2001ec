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

// Objective instruments: Welch periodograms of directional noise signals,
// all-pole envelope spectra, log-spectral distance, PSNR and energy-map error.

#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "grain/core_types.hpp"
#include "grain/noise_analysis.hpp"

namespace grain {

enum class Direction { kHorizontal, kVertical };

inline const char* ToString(Direction d) {
  return d == Direction::kHorizontal ? "horizontal" : "vertical";
}

namespace metrics_internal {

// FFTW planning is not thread-safe; execution with new-array functions is.
inline std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex transform of a fixed length.
class RealFft {
 public:
  explicit RealFft(int n)
      : n_(n),
        in_(fftw_alloc_real(static_cast<std::size_t>(n))),
        out_(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {
    std::lock_guard lock(PlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(PlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void Execute() { fftw_execute(plan_); }
  double PowerAt(int k) const {
    return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace metrics_internal

inline std::vector<double> DirectionalSignal(const NoisePlane& plane,
                                             Direction d) {
  return d == Direction::kHorizontal ? ConcatRows(plane) : ConcatCols(plane);
}

/// Welch estimate over `signal`: Hann windows of `window_len` samples with 50%
/// overlap, each |FFT|^2 divided by the window energy, then averaged. Returns
/// window_len / 2 + 1 bins from DC to Nyquist; unit white noise sits at 1.
inline std::vector<double> Periodogram(std::span<const double> signal,
                                       int window_len) {
  if (window_len < 2 || (window_len & (window_len - 1)) != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "window length must be a power of two >= 2");
  }
  if (signal.size() < static_cast<std::size_t>(window_len)) {
    throw Error(ErrorCode::kGeometry,
                "signal of " + std::to_string(signal.size()) +
                    " samples is shorter than one window");
  }
  const auto n = static_cast<std::size_t>(window_len);
  std::vector<double> window(n);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    energy += window[i] * window[i];
  }
  metrics_internal::RealFft fft(window_len);
  std::vector<double> power(n / 2 + 1, 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + n <= signal.size(); start += n / 2) {
    double* in = fft.input();
    for (std::size_t i = 0; i < n; ++i) in[i] = signal[start + i] * window[i];
    fft.Execute();
    for (std::size_t k = 0; k < power.size(); ++k) {
      power[k] += fft.PowerAt(static_cast<int>(k));
    }
    ++segments;
  }
  for (double& p : power) p /= energy * static_cast<double>(segments);
  return power;
}

inline std::vector<double> Periodogram(const NoisePlane& plane, Direction d,
                                       int window_len) {
  return Periodogram(DirectionalSignal(plane, d), window_len);
}

/// |H(e^{jw})|^2 = 1 / |1 - sum_k a_k e^{-jwk}|^2 on n_points uniformly spaced
/// frequencies from 0 to pi inclusive.
inline std::vector<double> EnvelopeSpectrum(const SpectralEnvelope& envelope,
                                            int n_points) {
  if (n_points < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two points");
  }
  std::vector<double> out(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double w = std::numbers::pi * i / (n_points - 1);
    std::complex<double> denom = 1.0;
    for (int k = 0; k < envelope.order(); ++k) {
      denom -= envelope.a[static_cast<std::size_t>(k)] *
               std::polar(1.0, -w * (k + 1));
    }
    out[static_cast<std::size_t>(i)] = 1.0 / std::norm(denom);
  }
  return out;
}

inline double ToDb(double power) { return 10.0 * std::log10(power); }

/// RMS of the dB difference after removing its mean (gain alignment).
inline double LogSpectralDistance(std::span<const double> s1,
                                  std::span<const double> s2) {
  if (s1.size() != s2.size() || s1.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "spectra must have equal length");
  }
  std::vector<double> diff(s1.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    if (!(s1[i] > 0.0) || !(s2[i] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "spectrum bin " + std::to_string(i) + " is not positive");
    }
    diff[i] = ToDb(s1[i]) - ToDb(s2[i]);
  }
  const double mean =
      std::accumulate(diff.begin(), diff.end(), 0.0) / diff.size();
  double sum = 0.0;
  for (double d : diff) sum += (d - mean) * (d - mean);
  return std::sqrt(sum / diff.size());
}

struct SpectrumReport {
  Direction direction = Direction::kHorizontal;
  std::vector<double> freqs;           // cycles/sample, 0..0.5
  std::vector<double> periodogram_db;
  std::vector<double> envelope_db;     // shifted to the periodogram's mean level
  double log_spectral_distance = 0.0;  // dB
};

inline SpectrumReport MakeSpectrumReport(const NoisePlane& plane,
                                         const SpectralEnvelope& envelope,
                                         Direction d, int window_len = 256) {
  SpectrumReport r;
  r.direction = d;
  const std::vector<double> pg = Periodogram(plane, d, window_len);
  const std::vector<double> env =
      EnvelopeSpectrum(envelope, static_cast<int>(pg.size()));
  r.log_spectral_distance = LogSpectralDistance(pg, env);
  double offset = 0.0;
  for (std::size_t i = 0; i < pg.size(); ++i) {
    r.freqs.push_back(static_cast<double>(i) / window_len);
    r.periodogram_db.push_back(ToDb(pg[i]));
    r.envelope_db.push_back(ToDb(env[i]));
    offset += r.periodogram_db.back() - r.envelope_db.back();
  }
  offset /= static_cast<double>(pg.size());
  for (double& e : r.envelope_db) e += offset;
  return r;
}

/// CSV with columns freq,periodogram_db,envelope_db.
inline std::string SpectrumCsv(const SpectrumReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "freq,periodogram_db,envelope_db\n";
  for (std::size_t i = 0; i < r.freqs.size(); ++i) {
    out << r.freqs[i] << ',' << r.periodogram_db[i] << ',' << r.envelope_db[i]
        << '\n';
  }
  return out.str();
}

/// 10 log10(255^2 / MSE); +infinity for identical planes.
inline double Psnr(const Plane& a, const Plane& b) {
  if (!a.same_geometry(b)) {
    throw Error(ErrorCode::kGeometry, "PSNR planes differ in size");
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.samples()[i]) - static_cast<double>(b.samples()[i]);
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / (sse / static_cast<double>(a.size())));
}

struct MapError {
  double max_relative = 0.0;
  double mean_relative = 0.0;
  double max_absolute = 0.0;
};

/// Per-cell |measured - reference| / max(reference, floor).
inline MapError BlockRmsError(const EnergyMap& measured,
                              const EnergyMap& reference,
                              double floor = 1e-6) {
  if (measured.width != reference.width ||
      measured.height != reference.height) {
    throw Error(ErrorCode::kGeometry, "energy maps differ in size");
  }
  MapError e;
  if (reference.values.empty()) return e;
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.values.size(); ++i) {
    const double abs_err = std::abs(measured.values[i] - reference.values[i]);
    const double rel = abs_err / std::max(reference.values[i], floor);
    e.max_absolute = std::max(e.max_absolute, abs_err);
    e.max_relative = std::max(e.max_relative, rel);
    sum += rel;
  }
  e.mean_relative = sum / static_cast<double>(reference.values.size());
  return e;
}

}  // namespace grain
