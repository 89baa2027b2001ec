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

// Motion-compensated temporal noise reduction. Every neighbor frame within
// +-K of the current one is block-matched against it, and the compensated
// predictions are averaged with the current frame using per-block weights
// that decay with the match SAD.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <tuple>
#include <utility>
#include <vector>

#include "grain/core_types.hpp"

namespace grain {

struct MotionVector {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

/// One vector and one SAD per block of a `block`-sized grid covering the
/// plane; edge blocks may be partial.
struct MotionField {
  int block = 0;
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<MotionVector> vectors;
  std::vector<std::uint64_t> sads;

  MotionField() = default;
  MotionField(int block_size, int plane_w, int plane_h)
      : block(block_size),
        blocks_x((plane_w + block_size - 1) / block_size),
        blocks_y((plane_h + block_size - 1) / block_size),
        vectors(static_cast<std::size_t>(blocks_x) * blocks_y),
        sads(vectors.size(), 0) {}

  std::size_t index(int bx, int by) const {
    return static_cast<std::size_t>(by) * blocks_x + bx;
  }
};

namespace denoise_internal {

struct BlockRect {
  int x0, y0, x1, y1;  // half-open
  int pixels() const { return (x1 - x0) * (y1 - y0); }
};

inline BlockRect BlockAt(const MotionField& f, int bx, int by, int w, int h) {
  return {bx * f.block, by * f.block, std::min(w, (bx + 1) * f.block),
          std::min(h, (by + 1) * f.block)};
}

inline std::uint64_t BlockSad(const Plane& target, const Plane& reference,
                              const BlockRect& r, MotionVector v) {
  std::uint64_t sad = 0;
  const bool inside = r.x0 + v.dx >= 0 && r.y0 + v.dy >= 0 &&
                      r.x1 + v.dx <= reference.width() &&
                      r.y1 + v.dy <= reference.height();
  for (int y = r.y0; y < r.y1; ++y) {
    const std::uint8_t* t = &target.at(r.x0, y);
    if (inside) {
      const std::uint8_t* p = &reference.at(r.x0 + v.dx, y + v.dy);
      for (int i = 0; i < r.x1 - r.x0; ++i) {
        sad += static_cast<std::uint64_t>(std::abs(int{t[i]} - int{p[i]}));
      }
    } else {
      for (int x = r.x0; x < r.x1; ++x) {
        sad += static_cast<std::uint64_t>(
            std::abs(int{target.at(x, y)} -
                     int{reference.clamped(x + v.dx, y + v.dy)}));
      }
    }
  }
  return sad;
}

}  // namespace denoise_internal

/// Full-search block matching of `target` against `reference`.
///
/// Each block takes the vector with the smallest SAD over [-r, r]^2; ties go to
/// the smallest |dx|+|dy|, then the smallest dy, then the smallest dx. Reads
/// outside `reference` clamp to its edge.
inline MotionField MotionSearch(const Plane& target, const Plane& reference,
                                const DenoiseConfig& cfg) {
  using namespace denoise_internal;
  cfg.Validate();
  if (!target.same_geometry(reference)) {
    throw Error(ErrorCode::kGeometry, "motion search planes differ in size");
  }
  MotionField field(cfg.block, target.width(), target.height());
  const int r = cfg.search_radius;
  for (int by = 0; by < field.blocks_y; ++by) {
    for (int bx = 0; bx < field.blocks_x; ++bx) {
      const BlockRect rect =
          BlockAt(field, bx, by, target.width(), target.height());
      MotionVector best{};
      std::uint64_t best_sad = BlockSad(target, reference, rect, best);
      auto key = [](std::uint64_t sad, MotionVector v) {
        return std::make_tuple(sad, std::abs(v.dx) + std::abs(v.dy), v.dy,
                               v.dx);
      };
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const MotionVector v{dx, dy};
          const std::uint64_t sad = BlockSad(target, reference, rect, v);
          if (key(sad, v) < key(best_sad, best)) {
            best = v;
            best_sad = sad;
          }
        }
      }
      field.vectors[field.index(bx, by)] = best;
      field.sads[field.index(bx, by)] = best_sad;
    }
  }
  return field;
}

/// Builds the prediction: every block copied from `reference` displaced by
/// its vector, with edge-clamped reads.
inline Plane Compensate(const Plane& reference, const MotionField& field) {
  Plane out(reference.width(), reference.height());
  const int expected_x = (reference.width() + field.block - 1) / field.block;
  const int expected_y = (reference.height() + field.block - 1) / field.block;
  if (field.block < 1 || field.blocks_x != expected_x ||
      field.blocks_y != expected_y) {
    throw Error(ErrorCode::kGeometry, "motion field does not match plane");
  }
  for (int by = 0; by < field.blocks_y; ++by) {
    for (int bx = 0; bx < field.blocks_x; ++bx) {
      const auto rect = denoise_internal::BlockAt(
          field, bx, by, reference.width(), reference.height());
      const MotionVector v = field.vectors[field.index(bx, by)];
      for (int y = rect.y0; y < rect.y1; ++y) {
        for (int x = rect.x0; x < rect.x1; ++x) {
          out.at(x, y) = reference.clamped(x + v.dx, y + v.dy);
        }
      }
    }
  }
  return out;
}

/// Reuses a luma motion field on a plane of a different size: the block size
/// and vectors scale by the plane-size ratio (vectors rounded toward zero),
/// and SADs are recomputed on the chroma planes.
inline MotionField ScaleMotionField(const MotionField& luma, int luma_w,
                                    int luma_h, const Plane& target,
                                    const Plane& reference) {
  if (target.width() == luma_w && target.height() == luma_h) {
    MotionField f = luma;
    for (std::size_t i = 0; i < f.vectors.size(); ++i) {
      const auto rect = denoise_internal::BlockAt(
          f, static_cast<int>(i % f.blocks_x), static_cast<int>(i / f.blocks_x),
          target.width(), target.height());
      f.sads[i] = denoise_internal::BlockSad(target, reference, rect,
                                             f.vectors[i]);
    }
    return f;
  }
  const int block = ChromaBeta(luma.block, luma_w, target.width());
  MotionField f(block, target.width(), target.height());
  for (int by = 0; by < f.blocks_y; ++by) {
    for (int bx = 0; bx < f.blocks_x; ++bx) {
      const MotionVector lv = luma.vectors[luma.index(
          std::min(bx, luma.blocks_x - 1), std::min(by, luma.blocks_y - 1))];
      // Integer division truncates toward zero.
      const MotionVector v{
          static_cast<int>(static_cast<long long>(lv.dx) * target.width() /
                           luma_w),
          static_cast<int>(static_cast<long long>(lv.dy) * target.height() /
                           luma_h)};
      const auto rect = denoise_internal::BlockAt(f, bx, by, target.width(),
                                                  target.height());
      f.vectors[f.index(bx, by)] = v;
      f.sads[f.index(bx, by)] =
          denoise_internal::BlockSad(target, reference, rect, v);
    }
  }
  return f;
}

struct Prediction {
  Plane plane;
  MotionField field;
};

/// Similarity weight of a prediction block: exp(-SAD / (lambda * pixels)).
inline double PredictionWeight(std::uint64_t sad, int pixels, double lambda) {
  return std::exp(-static_cast<double>(sad) / (lambda * pixels));
}

/// Per-block weighted average of `current` (weight 1) and the predictions,
/// rounded to nearest and clamped to 0..255.
inline Plane TemporalFilter(const Plane& current,
                            const std::vector<Prediction>& predictions,
                            const DenoiseConfig& cfg) {
  cfg.Validate();
  for (const Prediction& p : predictions) {
    if (!p.plane.same_geometry(current)) {
      throw Error(ErrorCode::kGeometry, "prediction size differs from frame");
    }
  }
  const int w = current.width();
  const int h = current.height();
  Plane out(w, h);
  std::vector<double> acc(current.size());
  std::vector<double> wsum(current.size(), 1.0);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = current.samples()[i];

  for (const Prediction& p : predictions) {
    const MotionField& f = p.field;
    for (int by = 0; by < f.blocks_y; ++by) {
      for (int bx = 0; bx < f.blocks_x; ++bx) {
        const auto rect = denoise_internal::BlockAt(f, bx, by, w, h);
        const double wn = PredictionWeight(f.sads[f.index(bx, by)],
                                           rect.pixels(), cfg.lambda);
        for (int y = rect.y0; y < rect.y1; ++y) {
          for (int x = rect.x0; x < rect.x1; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            acc[i] += wn * p.plane.samples()[i];
            wsum[i] += wn;
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double v = std::round(acc[i] / wsum[i]);
    out.samples()[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

/// Denoises one frame of `seq` from its clipped +-K neighborhood. Motion is
/// searched on luma; chroma reuses the scaled luma vectors.
inline Frame DenoiseFrame(const VideoSequence& seq, std::size_t index,
                          const DenoiseConfig& cfg) {
  const Frame& cur = seq.frames[index];
  const int lw = cur.width();
  const int lh = cur.height();
  std::vector<std::vector<Prediction>> per_channel(cur.planes.size());
  const long long first = std::max<long long>(0, static_cast<long long>(index) -
                                                     cfg.k_frames);
  const long long last =
      std::min<long long>(static_cast<long long>(seq.frames.size()) - 1,
                          static_cast<long long>(index) + cfg.k_frames);
  for (long long n = first; n <= last; ++n) {
    if (n == static_cast<long long>(index)) continue;
    const Frame& nb = seq.frames[static_cast<std::size_t>(n)];
    const MotionField luma = MotionSearch(cur.planes[0], nb.planes[0], cfg);
    for (std::size_t c = 0; c < cur.planes.size(); ++c) {
      MotionField field =
          c == 0 ? luma
                 : ScaleMotionField(luma, lw, lh, cur.planes[c], nb.planes[c]);
      Plane pred = Compensate(nb.planes[c], field);
      per_channel[c].push_back({std::move(pred), std::move(field)});
    }
  }
  Frame out;
  out.layout = cur.layout;
  for (std::size_t c = 0; c < cur.planes.size(); ++c) {
    out.planes.push_back(TemporalFilter(cur.planes[c], per_channel[c], cfg));
  }
  return out;
}

inline VideoSequence DenoiseSequence(const VideoSequence& seq,
                                     const DenoiseConfig& cfg,
                                     int threads = 1) {
  cfg.Validate();
  if (seq.frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot denoise an empty sequence");
  }
  seq.Validate();
  VideoSequence out;
  out.fps_num = seq.fps_num;
  out.fps_den = seq.fps_den;
  out.frames.resize(seq.frames.size());
  ParallelFor(seq.frames.size(), threads, [&](std::size_t i) {
    out.frames[i] = DenoiseFrame(seq, i, cfg);
  });
  return out;
}

}  // namespace grain
