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

// Sequence-level encoder and decoder paths built from the per-frame modules.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "grain/core_types.hpp"
#include "grain/model_bitstream.hpp"
#include "grain/noise_analysis.hpp"
#include "grain/noise_synthesis.hpp"

namespace grain {

struct SequenceAnalysis {
  ModelStream stream;
  std::vector<FrameNoiseModel> models;  // unquantized, per frame
};

/// Models N = noisy - base frame by frame and quantizes into a PNM1 stream.
/// The master seed is written to the header when `embed_seed` is set.
inline SequenceAnalysis AnalyzeSequence(const VideoSequence& noisy,
                                        const VideoSequence& base,
                                        const ModelConfig& cfg,
                                        bool embed_seed = false,
                                        int threads = 1) {
  cfg.Validate();
  if (cfg.lar_range != kStreamLarRange) {
    throw Error(ErrorCode::kInvalidArgument,
                "PNM1 streams use a fixed LAR range of 8");
  }
  if (cfg.beta > 0xffff) {
    throw Error(ErrorCode::kInvalidArgument, "beta does not fit the stream");
  }
  noisy.Validate();
  base.Validate();
  if (noisy.frames.size() != base.frames.size()) {
    throw Error(ErrorCode::kGeometry,
                "input has " + std::to_string(noisy.frames.size()) +
                    " frames, base has " + std::to_string(base.frames.size()));
  }
  if (noisy.frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot analyze an empty sequence");
  }
  if (!noisy.frames[0].same_geometry(base.frames[0])) {
    throw Error(ErrorCode::kGeometry, "input and base differ in geometry");
  }

  SequenceAnalysis result;
  StreamHeader& h = result.stream.header;
  h.width = static_cast<std::uint32_t>(noisy.width());
  h.height = static_cast<std::uint32_t>(noisy.height());
  h.fps_num = noisy.fps_num;
  h.fps_den = noisy.fps_den;
  h.layout = noisy.layout();
  h.beta = static_cast<std::uint16_t>(cfg.beta);
  h.order = static_cast<std::uint8_t>(cfg.order);
  h.has_seed = embed_seed;
  h.seed = embed_seed ? cfg.master_seed : 0;
  h.frame_count = static_cast<std::uint32_t>(noisy.frames.size());
  StreamChannelGeometry(h);  // rejects planes smaller than one block

  result.models.resize(noisy.frames.size());
  result.stream.frames.resize(noisy.frames.size());
  ParallelFor(noisy.frames.size(), threads, [&](std::size_t f) {
    const NoiseLayer layer = ExtractNoiseLayer(noisy.frames[f], base.frames[f]);
    result.models[f] = AnalyzeFrame(layer, cfg);
    result.stream.frames[f] = QuantizeFrameModel(result.models[f], cfg.lar_range);
  });
  return result;
}

inline std::uint64_t EffectiveSeed(const StreamHeader& h,
                                   std::optional<std::uint64_t> override_seed) {
  if (override_seed) return *override_seed;
  return h.has_seed ? h.seed : 0;
}

/// Decodes every frame's model and synthesizes its noise layer.
inline std::vector<NoiseLayer> SynthesizeNoise(
    const ModelStream& stream, std::uint64_t master_seed, int threads = 1,
    double epsilon = 1e-6) {
  const StreamHeader& h = stream.header;
  const auto geometry = StreamChannelGeometry(h);
  std::vector<NoiseLayer> layers(stream.frames.size());
  ParallelFor(stream.frames.size(), threads, [&](std::size_t f) {
    const FrameNoiseModel model =
        DequantizeFrameModel(stream.frames[f], geometry, kStreamLarRange);
    layers[f] = SynthesizeFrame(model, static_cast<int>(h.width),
                                static_cast<int>(h.height), h.layout,
                                master_seed, f, epsilon);
  });
  return layers;
}

inline void CheckStreamMatchesVideo(const StreamHeader& h,
                                    const VideoSequence& base) {
  if (base.frames.size() != h.frame_count) {
    throw Error(ErrorCode::kGeometry,
                "model has " + std::to_string(h.frame_count) +
                    " frames, base video has " +
                    std::to_string(base.frames.size()));
  }
  if (!base.frames.empty() &&
      (static_cast<std::uint32_t>(base.width()) != h.width ||
       static_cast<std::uint32_t>(base.height()) != h.height ||
       base.layout() != h.layout)) {
    throw Error(ErrorCode::kGeometry,
                "model geometry " + std::to_string(h.width) + "x" +
                    std::to_string(h.height) + " does not match base video " +
                    std::to_string(base.width()) + "x" +
                    std::to_string(base.height()));
  }
}

/// base + synthesized noise, frame by frame.
inline VideoSequence Reconstruct(const ModelStream& stream,
                                 const VideoSequence& base,
                                 std::uint64_t master_seed, int threads = 1) {
  base.Validate();
  CheckStreamMatchesVideo(stream.header, base);
  const std::vector<NoiseLayer> noise =
      SynthesizeNoise(stream, master_seed, threads);
  VideoSequence out;
  out.fps_num = base.fps_num;
  out.fps_den = base.fps_den;
  out.frames.resize(base.frames.size());
  for (std::size_t f = 0; f < base.frames.size(); ++f) {
    out.frames[f] = Recombine(base.frames[f], noise[f]);
  }
  return out;
}

}  // namespace grain
