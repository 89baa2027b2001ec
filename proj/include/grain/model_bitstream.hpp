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

// PNM1 noise-model stream. All integers little-endian, byte aligned.
//
//   offset size  field
//   0      4     magic "PNM1"
//   4      1     version (1)
//   5      4     width   (luma pixels)
//   9      4     height
//   13     4     fps_num
//   17     4     fps_den
//   21     1     layout  (0 mono, 1 4:2:0, 2 4:4:4)
//   22     2     beta    (luma block size)
//   24     1     p       (prediction order)
//   25     1     flags   (bit 0: seed follows; other bits must be 0)
//   26     8     seed    (only when flags bit 0 is set)
//   ..     4     frame_count
//
// Then, per frame and per channel (Y, Cb, Cr):
//   p bytes   horizontal LAR codes
//   p bytes   vertical LAR codes
//   4 bytes   energy-map scale, IEEE-754 binary32
//   Wb*Hb     energy-map codes, row-major

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "grain/core_types.hpp"
#include "grain/noise_analysis.hpp"

namespace grain {

inline constexpr std::array<std::uint8_t, 4> kStreamMagic = {'P', 'N', 'M', '1'};
inline constexpr std::uint8_t kStreamVersion = 1;
/// The stream carries no quantizer range; every PNM1 stream uses this one.
inline constexpr double kStreamLarRange = 8.0;

struct StreamHeader {
  std::uint8_t version = kStreamVersion;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t fps_num = 30;
  std::uint32_t fps_den = 1;
  ChromaLayout layout = ChromaLayout::kMono;
  std::uint16_t beta = 30;
  std::uint8_t order = 10;
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::uint32_t frame_count = 0;

  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct QuantizedEnvelope {
  std::vector<std::uint8_t> codes;
  friend bool operator==(const QuantizedEnvelope&,
                         const QuantizedEnvelope&) = default;
};

/// Energy map as codes in 0..255 scaled by the map maximum:
/// value ~ code * scale / 255.
struct QuantizedEnergyMap {
  int width = 0;
  int height = 0;
  float scale = 0.0f;
  std::vector<std::uint8_t> codes;
  friend bool operator==(const QuantizedEnergyMap&,
                         const QuantizedEnergyMap&) = default;
};

struct QuantizedChannelModel {
  QuantizedEnvelope horizontal;
  QuantizedEnvelope vertical;
  QuantizedEnergyMap sde;
  friend bool operator==(const QuantizedChannelModel&,
                         const QuantizedChannelModel&) = default;
};

struct QuantizedFrameModel {
  std::vector<QuantizedChannelModel> channels;
  friend bool operator==(const QuantizedFrameModel&,
                         const QuantizedFrameModel&) = default;
};

struct ModelStream {
  StreamHeader header;
  std::vector<QuantizedFrameModel> frames;
  friend bool operator==(const ModelStream&, const ModelStream&) = default;
};

// -----------------------------------------------------------------------------
// Quantizers

inline double LarStep(double lar_range) { return 2.0 * lar_range / 256.0; }

/// Uniform mid-rise 8-bit quantizer over [-lar_range, lar_range].
inline std::uint8_t QuantizeLar(double lar, double lar_range) {
  if (!(lar_range > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "lar_range must be > 0");
  }
  const double code = std::floor((lar + lar_range) / LarStep(lar_range));
  return static_cast<std::uint8_t>(std::clamp(code, 0.0, 255.0));
}

inline double DequantizeLar(std::uint8_t code, double lar_range) {
  return (code + 0.5) * LarStep(lar_range) - lar_range;
}

inline QuantizedEnergyMap QuantizeSde(const EnergyMap& map) {
  QuantizedEnergyMap q;
  q.width = map.width;
  q.height = map.height;
  double max_value = 0.0;
  for (double v : map.values) max_value = std::max(max_value, v);
  q.scale = static_cast<float>(max_value);
  q.codes.assign(map.values.size(), 0);
  if (q.scale > 0.0f) {
    const double scale = q.scale;
    for (std::size_t i = 0; i < map.values.size(); ++i) {
      const double code = std::round(255.0 * map.values[i] / scale);
      q.codes[i] = static_cast<std::uint8_t>(std::clamp(code, 0.0, 255.0));
    }
  }
  return q;
}

inline EnergyMap DequantizeSde(const QuantizedEnergyMap& q, int beta) {
  EnergyMap map(beta, {q.width, q.height});
  const double scale = q.scale;
  for (std::size_t i = 0; i < q.codes.size(); ++i) {
    map.values[i] = q.codes[i] * scale / 255.0;
  }
  return map;
}

inline QuantizedEnvelope QuantizeEnvelope(const SpectralEnvelope& e,
                                          double lar_range) {
  QuantizedEnvelope q;
  for (double lar : e.lar) q.codes.push_back(QuantizeLar(lar, lar_range));
  return q;
}

inline SpectralEnvelope DequantizeEnvelope(const QuantizedEnvelope& q,
                                           double lar_range) {
  std::vector<double> lar;
  lar.reserve(q.codes.size());
  for (std::uint8_t c : q.codes) lar.push_back(DequantizeLar(c, lar_range));
  return SpectralEnvelope::FromLar(lar);
}

// -----------------------------------------------------------------------------
// Geometry shared by encoder and decoder

struct ChannelGeometry {
  PlaneDims plane;
  int beta = 0;
  GridDims grid;
};

inline std::vector<ChannelGeometry> StreamChannelGeometry(
    std::uint32_t width, std::uint32_t height, ChromaLayout layout,
    int beta) {
  if (width < 1 || height < 1 || width > 0x7fffffffu || height > 0x7fffffffu) {
    throw Error(ErrorCode::kGeometry, "stream geometry out of range");
  }
  std::vector<ChannelGeometry> out;
  const auto w = static_cast<int>(width);
  for (const PlaneDims& d :
       PlaneGeometry(w, static_cast<int>(height), layout)) {
    ChannelGeometry g;
    g.plane = d;
    g.beta = PlaneBeta(beta, w, d.width);
    g.grid = SdeGridDims(d.width, d.height, g.beta);
    out.push_back(g);
  }
  return out;
}

inline std::vector<ChannelGeometry> StreamChannelGeometry(
    const StreamHeader& h) {
  return StreamChannelGeometry(h.width, h.height, h.layout, h.beta);
}

inline QuantizedFrameModel QuantizeFrameModel(const FrameNoiseModel& model,
                                              double lar_range) {
  QuantizedFrameModel q;
  for (const ChannelNoiseModel& c : model.channels) {
    q.channels.push_back({QuantizeEnvelope(c.horizontal, lar_range),
                          QuantizeEnvelope(c.vertical, lar_range),
                          QuantizeSde(c.sde)});
  }
  return q;
}

inline FrameNoiseModel DequantizeFrameModel(
    const QuantizedFrameModel& q, const std::vector<ChannelGeometry>& geometry,
    double lar_range) {
  if (q.channels.size() != geometry.size()) {
    throw Error(ErrorCode::kGeometry, "channel count does not match stream");
  }
  FrameNoiseModel model;
  for (std::size_t c = 0; c < q.channels.size(); ++c) {
    const QuantizedChannelModel& qc = q.channels[c];
    model.channels.push_back(
        {DequantizeSde(qc.sde, geometry[c].beta),
         DequantizeEnvelope(qc.horizontal, lar_range),
         DequantizeEnvelope(qc.vertical, lar_range)});
  }
  return model;
}

// -----------------------------------------------------------------------------
// Serialization

namespace stream_internal {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::span<const std::uint8_t> s) {
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(le(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncated,
                  std::string("stream ends inside ") + what, data_.size());
    }
  }
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline std::uint64_t FramePayloadBytes(
    const std::vector<ChannelGeometry>& geometry, int order) {
  std::uint64_t total = 0;
  for (const ChannelGeometry& g : geometry) {
    total += 2ull * static_cast<std::uint64_t>(order) + 4 +
             static_cast<std::uint64_t>(g.grid.width) *
                 static_cast<std::uint64_t>(g.grid.height);
  }
  return total;
}

inline void ValidateHeader(const StreamHeader& h, std::size_t offset) {
  if (h.fps_num < 1 || h.fps_den < 1) {
    throw Error(ErrorCode::kMalformedHeader, "frame rate must be positive",
                offset);
  }
  if (static_cast<std::uint8_t>(h.layout) > 2) {
    throw Error(ErrorCode::kMalformedHeader,
                "unknown layout " + std::to_string(int(h.layout)), offset);
  }
  if (h.beta < 2) {
    throw Error(ErrorCode::kMalformedHeader, "beta must be >= 2", offset);
  }
  if (h.order < 1 || h.order > 32) {
    throw Error(ErrorCode::kMalformedHeader, "order must be in [1, 32]",
                offset);
  }
  try {
    StreamChannelGeometry(h);
  } catch (const Error& e) {
    throw Error(ErrorCode::kGeometry, e.what(), offset);
  }
}

}  // namespace stream_internal

/// Serialized size of one frame's model.
inline std::uint64_t FramePayloadBytes(const StreamHeader& h) {
  return stream_internal::FramePayloadBytes(StreamChannelGeometry(h), h.order);
}

inline std::vector<std::uint8_t> Serialize(const ModelStream& stream) {
  using namespace stream_internal;
  const StreamHeader& h = stream.header;
  if (h.version != kStreamVersion) {
    throw Error(ErrorCode::kVersionMismatch, "only version 1 is writable");
  }
  ValidateHeader(h, 0);
  if (h.frame_count != stream.frames.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "header frame_count does not match frame list");
  }
  const auto geometry = StreamChannelGeometry(h);
  Writer w;
  w.raw(kStreamMagic);
  w.u8(h.version);
  w.u32(h.width);
  w.u32(h.height);
  w.u32(h.fps_num);
  w.u32(h.fps_den);
  w.u8(static_cast<std::uint8_t>(h.layout));
  w.u16(h.beta);
  w.u8(h.order);
  w.u8(h.has_seed ? 1 : 0);
  if (h.has_seed) w.u64(h.seed);
  w.u32(h.frame_count);
  for (std::size_t f = 0; f < stream.frames.size(); ++f) {
    const QuantizedFrameModel& frame = stream.frames[f];
    if (frame.channels.size() != geometry.size()) {
      throw Error(ErrorCode::kGeometry,
                  "frame " + std::to_string(f) + " has wrong channel count");
    }
    for (std::size_t c = 0; c < geometry.size(); ++c) {
      const QuantizedChannelModel& ch = frame.channels[c];
      const auto cells = static_cast<std::size_t>(geometry[c].grid.width) *
                         geometry[c].grid.height;
      if (ch.horizontal.codes.size() != h.order ||
          ch.vertical.codes.size() != h.order ||
          ch.sde.width != geometry[c].grid.width ||
          ch.sde.height != geometry[c].grid.height ||
          ch.sde.codes.size() != cells) {
        throw Error(ErrorCode::kGeometry,
                    "frame " + std::to_string(f) + " channel " +
                        std::to_string(c) + " does not match header geometry");
      }
      if (!std::isfinite(ch.sde.scale) || ch.sde.scale < 0.0f) {
        throw Error(ErrorCode::kInvalidArgument, "invalid energy-map scale");
      }
      if (ch.sde.scale == 0.0f &&
          std::any_of(ch.sde.codes.begin(), ch.sde.codes.end(),
                      [](auto c) { return c; })) {
        throw Error(ErrorCode::kInvalidArgument,
                    "zero energy-map scale with non-zero codes");
      }
      w.raw(ch.horizontal.codes);
      w.raw(ch.vertical.codes);
      w.f32(ch.sde.scale);
      w.raw(ch.sde.codes);
    }
  }
  return w.take();
}

inline ModelStream Deserialize(std::span<const std::uint8_t> data) {
  using namespace stream_internal;
  Reader r(data);
  ModelStream stream;
  StreamHeader& h = stream.header;

  const auto magic = r.raw(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kStreamMagic.begin())) {
    throw Error(ErrorCode::kBadMagic, "stream does not start with PNM1", 0);
  }
  h.version = r.u8("version");
  if (h.version != kStreamVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported version " + std::to_string(h.version), 4);
  }
  h.width = r.u32("width");
  h.height = r.u32("height");
  h.fps_num = r.u32("fps_num");
  h.fps_den = r.u32("fps_den");
  h.layout = static_cast<ChromaLayout>(r.u8("layout"));
  h.beta = r.u16("beta");
  h.order = r.u8("order");
  const std::size_t flags_at = r.offset();
  const std::uint8_t flags = r.u8("flags");
  if (flags & ~1u) {
    throw Error(ErrorCode::kMalformedHeader,
                "reserved flag bits set: " + std::to_string(flags), flags_at);
  }
  h.has_seed = flags & 1u;
  if (h.has_seed) h.seed = r.u64("seed");
  h.frame_count = r.u32("frame_count");
  ValidateHeader(h, r.offset());

  const auto geometry = StreamChannelGeometry(h);
  const std::uint64_t frame_bytes = FramePayloadBytes(geometry, h.order);
  const std::size_t payload_start = r.offset();
  const std::uint64_t available = r.remaining();
  if (available / frame_bytes < h.frame_count) {
    const std::uint64_t whole = available / frame_bytes;
    throw Error(ErrorCode::kTruncated,
                "frame " + std::to_string(whole) + " of " +
                    std::to_string(h.frame_count) + " is truncated",
                data.size());
  }
  if (available - frame_bytes * h.frame_count != 0) {
    throw Error(ErrorCode::kTrailingData,
                std::to_string(available - frame_bytes * h.frame_count) +
                    " bytes follow the last frame",
                payload_start + frame_bytes * h.frame_count);
  }

  stream.frames.resize(h.frame_count);
  for (std::uint32_t f = 0; f < h.frame_count; ++f) {
    auto& frame = stream.frames[f];
    for (const ChannelGeometry& g : geometry) {
      QuantizedChannelModel ch;
      const auto hz = r.raw(h.order, "horizontal envelope");
      const auto vt = r.raw(h.order, "vertical envelope");
      ch.horizontal.codes.assign(hz.begin(), hz.end());
      ch.vertical.codes.assign(vt.begin(), vt.end());
      const std::size_t scale_at = r.offset();
      ch.sde.scale = r.f32("energy-map scale");
      ch.sde.width = g.grid.width;
      ch.sde.height = g.grid.height;
      const auto codes = r.raw(
          static_cast<std::size_t>(g.grid.width) * g.grid.height, "energy map");
      ch.sde.codes.assign(codes.begin(), codes.end());
      if (!std::isfinite(ch.sde.scale) || ch.sde.scale < 0.0f) {
        throw Error(ErrorCode::kMalformedHeader,
                    "frame " + std::to_string(f) + ": invalid energy-map scale",
                    scale_at);
      }
      if (ch.sde.scale == 0.0f &&
          std::any_of(codes.begin(), codes.end(), [](auto c) { return c; })) {
        throw Error(ErrorCode::kMalformedHeader,
                    "frame " + std::to_string(f) +
                        ": zero energy-map scale with non-zero codes",
                    scale_at);
      }
      frame.channels.push_back(std::move(ch));
    }
  }
  return stream;
}

// -----------------------------------------------------------------------------
// Bitrate accounting

/// Envelope rate in kbit/s: channels * 2 directions * p codes * 8 bits * fps.
inline double SeBitrateKbps(int order, int channels, std::uint32_t fps_num,
                            std::uint32_t fps_den) {
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "order must be >= 1");
  const double bits_per_frame = channels * 2.0 * order * 8.0;
  return bits_per_frame * fps_num / fps_den / 1000.0;
}

struct BitrateReport {
  int channels = 0;
  double fps = 0.0;
  std::size_t frames = 0;
  double se_kbps = 0.0;
  double sde_kbps = 0.0;
  double total_kbps = 0.0;
};

inline BitrateReport ModelBitrateReport(const ModelStream& stream) {
  const StreamHeader& h = stream.header;
  BitrateReport report;
  report.channels = ChannelCount(h.layout);
  report.fps = static_cast<double>(h.fps_num) / h.fps_den;
  report.frames = stream.frames.size();
  if (stream.frames.empty()) return report;
  report.se_kbps = SeBitrateKbps(h.order, report.channels, h.fps_num, h.fps_den);
  double sde_bytes = 0.0;
  for (const QuantizedFrameModel& f : stream.frames) {
    for (const QuantizedChannelModel& c : f.channels) {
      sde_bytes += 4.0 + static_cast<double>(c.sde.codes.size());
    }
  }
  const double per_frame = sde_bytes / static_cast<double>(stream.frames.size());
  report.sde_kbps = per_frame * 8.0 * report.fps / 1000.0;
  report.total_kbps = report.se_kbps + report.sde_kbps;
  return report;
}

}  // namespace grain
