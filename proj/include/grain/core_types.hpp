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

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace grain {

// -----------------------------------------------------------------------------
// Errors

enum class ErrorCode {
  kInvalidArgument,
  kGeometry,
  kMissingSignature,
  kUnknownColorspace,
  kMalformedHeader,
  kTruncated,
  kTrailingData,
  kBadMagic,
  kVersionMismatch,
  kDegenerateSignal,
  kUnstable,
  kIo,
  kHookFailure,
};

inline const char* ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kGeometry: return "geometry error";
    case ErrorCode::kMissingSignature: return "missing signature";
    case ErrorCode::kUnknownColorspace: return "unknown colorspace";
    case ErrorCode::kMalformedHeader: return "malformed header";
    case ErrorCode::kTruncated: return "truncated data";
    case ErrorCode::kTrailingData: return "trailing data";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kDegenerateSignal: return "degenerate signal";
    case ErrorCode::kUnstable: return "unstable predictor";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kHookFailure: return "encoder hook failure";
  }
  return "unknown error";
}

/// Structured error raised by every module. `offset` is set by the parsers and
/// names the byte position where decoding stopped.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(Format(code, message, offset)),
        code_(code),
        offset_(offset) {}

  ErrorCode code() const { return code_; }
  std::optional<std::size_t> offset() const { return offset_; }

 private:
  static std::string Format(ErrorCode code, const std::string& message,
                            std::optional<std::size_t> offset) {
    std::string s = ToString(code);
    s += ": ";
    s += message;
    if (offset) s += " (at byte offset " + std::to_string(*offset) + ")";
    return s;
  }

  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

// -----------------------------------------------------------------------------
// Planes, frames, sequences

/// Row-major, zero-based 2-D sample grid; (x, y) = (column, row).
template <typename T>
class BasicPlane {
 public:
  using value_type = T;

  BasicPlane() = default;
  BasicPlane(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::kGeometry,
                  "plane dimensions must be positive, got " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
    samples_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  BasicPlane(int width, int height, std::vector<T> samples)
      : BasicPlane(width, height) {
    if (samples.size() != samples_.size()) {
      throw Error(ErrorCode::kGeometry, "sample count does not match " +
                                            std::to_string(width) + "x" +
                                            std::to_string(height));
    }
    samples_ = std::move(samples);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  T& at(int x, int y) {
    return samples_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& at(int x, int y) const {
    return samples_[static_cast<std::size_t>(y) * width_ + x];
  }
  // Reads outside the plane return the nearest edge sample.
  const T& clamped(int x, int y) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::vector<T>& samples() { return samples_; }
  const std::vector<T>& samples() const { return samples_; }

  bool same_geometry(const BasicPlane& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }
  template <typename U>
  bool same_geometry(const BasicPlane<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  friend bool operator==(const BasicPlane&, const BasicPlane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> samples_;
};

using Plane = BasicPlane<std::uint8_t>;
using NoisePlane = BasicPlane<double>;

enum class ChromaLayout : std::uint8_t { kMono = 0, k420 = 1, k444 = 2 };

inline int ChannelCount(ChromaLayout layout) {
  return layout == ChromaLayout::kMono ? 1 : 3;
}

struct PlaneDims {
  int width = 0;
  int height = 0;
  friend bool operator==(const PlaneDims&, const PlaneDims&) = default;
};

/// Plane geometries for a frame of the given luma size, Y first.
inline std::vector<PlaneDims> PlaneGeometry(int width, int height,
                                            ChromaLayout layout) {
  std::vector<PlaneDims> dims{{width, height}};
  if (layout == ChromaLayout::k420) {
    const PlaneDims c{width / 2 + width % 2, height / 2 + height % 2};
    dims.push_back(c);
    dims.push_back(c);
  } else if (layout == ChromaLayout::k444) {
    dims.push_back({width, height});
    dims.push_back({width, height});
  }
  return dims;
}

struct Frame {
  ChromaLayout layout = ChromaLayout::kMono;
  std::vector<Plane> planes;

  static Frame Blank(int width, int height, ChromaLayout layout,
                     std::uint8_t luma = 0, std::uint8_t chroma = 128) {
    Frame f;
    f.layout = layout;
    const auto dims = PlaneGeometry(width, height, layout);
    for (std::size_t c = 0; c < dims.size(); ++c) {
      f.planes.emplace_back(dims[c].width, dims[c].height,
                            c == 0 ? luma : chroma);
    }
    return f;
  }

  int width() const { return planes.empty() ? 0 : planes[0].width(); }
  int height() const { return planes.empty() ? 0 : planes[0].height(); }

  bool same_geometry(const Frame& o) const {
    if (layout != o.layout || planes.size() != o.planes.size()) return false;
    for (std::size_t c = 0; c < planes.size(); ++c) {
      if (!planes[c].same_geometry(o.planes[c])) return false;
    }
    return true;
  }

  /// Throws kGeometry unless the planes follow the layout's size rule.
  void Validate() const {
    if (planes.empty()) throw Error(ErrorCode::kGeometry, "frame has no planes");
    const auto dims = PlaneGeometry(width(), height(), layout);
    if (dims.size() != planes.size()) {
      throw Error(ErrorCode::kGeometry, "plane count does not match layout");
    }
    for (std::size_t c = 0; c < dims.size(); ++c) {
      if (planes[c].width() != dims[c].width ||
          planes[c].height() != dims[c].height) {
        throw Error(ErrorCode::kGeometry,
                    "plane " + std::to_string(c) + " has wrong dimensions");
      }
    }
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct VideoSequence {
  std::vector<Frame> frames;
  std::uint32_t fps_num = 30;
  std::uint32_t fps_den = 1;

  int width() const { return frames.empty() ? 0 : frames[0].width(); }
  int height() const { return frames.empty() ? 0 : frames[0].height(); }
  ChromaLayout layout() const {
    return frames.empty() ? ChromaLayout::kMono : frames[0].layout;
  }
  double fps() const { return static_cast<double>(fps_num) / fps_den; }

  void Validate() const {
    if (fps_num < 1 || fps_den < 1) {
      throw Error(ErrorCode::kInvalidArgument, "frame rate must be positive");
    }
    for (const Frame& f : frames) {
      f.Validate();
      if (!f.same_geometry(frames.front())) {
        throw Error(ErrorCode::kGeometry,
                    "frames of a sequence must share geometry");
      }
    }
  }

  friend bool operator==(const VideoSequence&, const VideoSequence&) = default;
};

// -----------------------------------------------------------------------------
// Configuration

struct ModelConfig {
  int beta = 30;        // SDE block size in luma pixels
  int order = 10;       // LPC prediction order
  std::uint64_t master_seed = 0;
  double lar_range = 8.0;
  double sde_epsilon = 1e-6;

  void Validate() const {
    if (beta < 2) throw Error(ErrorCode::kInvalidArgument, "beta must be >= 2");
    if (order < 1 || order > 32) {
      throw Error(ErrorCode::kInvalidArgument, "order must be in [1, 32]");
    }
    if (!(lar_range > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "lar_range must be > 0");
    }
    if (!(sde_epsilon > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "sde_epsilon must be > 0");
    }
  }
};

struct DenoiseConfig {
  int k_frames = 3;       // temporal radius
  int block = 16;         // match block size
  int search_radius = 8;
  double lambda = 4.0;    // similarity decay in per-pixel SAD units

  void Validate() const {
    if (k_frames < 1) {
      throw Error(ErrorCode::kInvalidArgument, "k_frames must be >= 1");
    }
    if (block < 4) throw Error(ErrorCode::kInvalidArgument, "block must be >= 4");
    if (search_radius < 1) {
      throw Error(ErrorCode::kInvalidArgument, "search_radius must be >= 1");
    }
    if (!(lambda > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "lambda must be > 0");
    }
  }
};

// -----------------------------------------------------------------------------
// Geometry helpers

/// Block size for a plane whose extent along one axis is `plane_dim`, given
/// the luma block size and luma extent along that axis.
inline int ChromaBeta(int beta, int luma_dim, int plane_dim) {
  if (beta < 1 || luma_dim < 1 || plane_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "ChromaBeta inputs must be >= 1");
  }
  const auto scaled = static_cast<long long>(beta) * plane_dim / luma_dim;
  return static_cast<int>(std::max<long long>(1, scaled));
}

struct GridDims {
  int width = 0;
  int height = 0;
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

inline GridDims SdeGridDims(int plane_w, int plane_h, int beta) {
  if (beta < 1) throw Error(ErrorCode::kInvalidArgument, "beta must be >= 1");
  const GridDims g{plane_w / beta, plane_h / beta};
  if (g.width < 1 || g.height < 1) {
    throw Error(ErrorCode::kGeometry,
                "plane " + std::to_string(plane_w) + "x" +
                    std::to_string(plane_h) + " is smaller than one " +
                    std::to_string(beta) + "x" + std::to_string(beta) +
                    " block");
  }
  return g;
}

// -----------------------------------------------------------------------------
// Threading

/// Worker count from an explicit request, else GRAIN_MODEL_THREADS, else 1.
inline int ResolveThreads(std::optional<int> requested) {
  if (requested && *requested >= 1) return *requested;
  if (const char* env = std::getenv("GRAIN_MODEL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

/// Runs fn(i) for i in [0, n). Work items must write disjoint outputs; the
/// result never depends on `threads`.
template <typename Fn>
void ParallelFor(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace grain
