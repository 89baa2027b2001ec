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

// Y4M (YUV4MPEG2) and headerless planar 8-bit video I/O.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grain/core_types.hpp"

namespace grain {

struct Y4mHeader {
  int width = 0;
  int height = 0;
  std::uint32_t fps_num = 0;
  std::uint32_t fps_den = 0;
  std::string colorspace_tag = "420jpeg";
};

namespace y4m_internal {

inline constexpr std::string_view kSignature = "YUV4MPEG2";
inline constexpr std::string_view kFrameTag = "FRAME";

template <typename T>
bool ParseNumber(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::size_t FrameBytes(int width, int height, ChromaLayout layout) {
  std::size_t total = 0;
  for (const PlaneDims& d : PlaneGeometry(width, height, layout)) {
    total += static_cast<std::size_t>(d.width) * d.height;
  }
  return total;
}

/// Copies planes out of `data` starting at `offset`, which must hold a whole
/// frame.
inline Frame UnpackFrame(std::span<const std::uint8_t> data,
                         std::size_t offset, int width, int height,
                         ChromaLayout layout) {
  Frame f;
  f.layout = layout;
  for (const PlaneDims& d : PlaneGeometry(width, height, layout)) {
    const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
    const auto first = data.begin() + static_cast<std::ptrdiff_t>(offset);
    f.planes.emplace_back(d.width, d.height,
                          std::vector<std::uint8_t>(first, first + n));
    offset += n;
  }
  return f;
}

}  // namespace y4m_internal

inline ChromaLayout LayoutFromColorspaceTag(std::string_view tag,
                                            std::size_t offset = 0) {
  if (tag == "420jpeg" || tag == "420" || tag == "420paldv" ||
      tag == "420mpeg2") {
    return ChromaLayout::k420;
  }
  if (tag == "444") return ChromaLayout::k444;
  if (tag == "mono") return ChromaLayout::kMono;
  throw Error(ErrorCode::kUnknownColorspace,
              "unsupported colorspace token C" + std::string(tag), offset);
}

inline const char* ColorspaceTag(ChromaLayout layout) {
  switch (layout) {
    case ChromaLayout::kMono: return "mono";
    case ChromaLayout::k420: return "420jpeg";
    case ChromaLayout::k444: return "444";
  }
  return "420jpeg";
}

/// Parses the stream header line. On return `offset` points past its newline.
inline Y4mHeader ParseY4mHeader(std::span<const std::uint8_t> data,
                                std::size_t& offset) {
  using namespace y4m_internal;
  const std::string_view text(reinterpret_cast<const char*>(data.data()),
                              data.size());
  if (!text.starts_with(kSignature) ||
      (text.size() > kSignature.size() && text[kSignature.size()] != ' ' &&
       text[kSignature.size()] != '\n')) {
    throw Error(ErrorCode::kMissingSignature,
                "stream does not start with YUV4MPEG2", 0);
  }
  const std::size_t eol = text.find('\n');
  if (eol == std::string_view::npos) {
    throw Error(ErrorCode::kTruncated, "header line is not terminated",
                text.size());
  }
  Y4mHeader header;
  bool have_w = false, have_h = false, have_f = false;
  std::size_t pos = kSignature.size();
  while (pos < eol) {
    if (text[pos] == ' ') {
      ++pos;
      continue;
    }
    const std::size_t end = std::min(text.find(' ', pos), eol);
    const std::string_view token = text.substr(pos, end - pos);
    const std::string_view value = token.substr(1);
    switch (token[0]) {
      case 'W':
        have_w = ParseNumber(value, header.width) && header.width > 0;
        if (!have_w) {
          throw Error(ErrorCode::kMalformedHeader, "bad width token", pos);
        }
        break;
      case 'H':
        have_h = ParseNumber(value, header.height) && header.height > 0;
        if (!have_h) {
          throw Error(ErrorCode::kMalformedHeader, "bad height token", pos);
        }
        break;
      case 'F': {
        const std::size_t colon = value.find(':');
        have_f = colon != std::string_view::npos &&
                 ParseNumber(value.substr(0, colon), header.fps_num) &&
                 ParseNumber(value.substr(colon + 1), header.fps_den) &&
                 header.fps_num > 0 && header.fps_den > 0;
        if (!have_f) {
          throw Error(ErrorCode::kMalformedHeader, "bad frame-rate token", pos);
        }
        break;
      }
      case 'C':
        LayoutFromColorspaceTag(value, pos);
        header.colorspace_tag = std::string(value);
        break;
      default:
        // I (interlacing), A (aspect), X (extensions): accepted and ignored.
        break;
    }
    pos = end;
  }
  if (!have_w || !have_h || !have_f) {
    throw Error(ErrorCode::kMalformedHeader,
                "header lacks a mandatory W, H or F token", eol);
  }
  offset = eol + 1;
  return header;
}

inline VideoSequence ReadY4m(std::span<const std::uint8_t> data) {
  using namespace y4m_internal;
  std::size_t offset = 0;
  const Y4mHeader header = ParseY4mHeader(data, offset);
  VideoSequence seq;
  seq.fps_num = header.fps_num;
  seq.fps_den = header.fps_den;
  const ChromaLayout layout = LayoutFromColorspaceTag(header.colorspace_tag);
  const std::size_t frame_bytes = FrameBytes(header.width, header.height, layout);

  const std::string_view text(reinterpret_cast<const char*>(data.data()),
                              data.size());
  while (offset < data.size()) {
    if (text.compare(offset, kFrameTag.size(), kFrameTag) != 0) {
      throw Error(ErrorCode::kMalformedHeader,
                  "expected FRAME marker for frame " +
                      std::to_string(seq.frames.size()),
                  offset);
    }
    const std::size_t eol = text.find('\n', offset);
    if (eol == std::string_view::npos) {
      throw Error(ErrorCode::kTruncated,
                  "FRAME line of frame " + std::to_string(seq.frames.size()) +
                      " is not terminated",
                  data.size());
    }
    const std::size_t payload = eol + 1;
    if (data.size() - payload < frame_bytes) {
      throw Error(ErrorCode::kTruncated,
                  "frame " + std::to_string(seq.frames.size()) + " needs " +
                      std::to_string(frame_bytes) + " bytes, only " +
                      std::to_string(data.size() - payload) + " remain",
                  data.size());
    }
    seq.frames.push_back(
        UnpackFrame(data, payload, header.width, header.height, layout));
    offset = payload + frame_bytes;
  }
  return seq;
}

inline std::vector<std::uint8_t> WriteY4m(const VideoSequence& seq) {
  if (seq.frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot write an empty sequence");
  }
  seq.Validate();
  std::string header = "YUV4MPEG2 W" + std::to_string(seq.width()) + " H" +
                       std::to_string(seq.height()) + " F" +
                       std::to_string(seq.fps_num) + ":" +
                       std::to_string(seq.fps_den) + " Ip A0:0 C" +
                       ColorspaceTag(seq.layout()) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() +
              seq.frames.size() *
                  (6 + y4m_internal::FrameBytes(seq.width(), seq.height(),
                                                seq.layout())));
  for (const Frame& f : seq.frames) {
    constexpr std::string_view kLine = "FRAME\n";
    out.insert(out.end(), kLine.begin(), kLine.end());
    for (const Plane& p : f.planes) {
      out.insert(out.end(), p.samples().begin(), p.samples().end());
    }
  }
  return out;
}

/// Headerless planar 8-bit frames, Y then Cb, Cr.
inline VideoSequence ReadRawPlanar(std::span<const std::uint8_t> data,
                                   int width, int height, ChromaLayout layout,
                                   std::uint32_t fps_num,
                                   std::uint32_t fps_den) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kGeometry, "raw geometry must be positive");
  }
  if (fps_num < 1 || fps_den < 1) {
    throw Error(ErrorCode::kInvalidArgument, "frame rate must be positive");
  }
  const std::size_t frame_bytes =
      y4m_internal::FrameBytes(width, height, layout);
  if (data.size() % frame_bytes != 0) {
    throw Error(ErrorCode::kTruncated,
                "raw stream of " + std::to_string(data.size()) +
                    " bytes is not a whole number of " +
                    std::to_string(frame_bytes) + "-byte frames",
                data.size() - data.size() % frame_bytes);
  }
  VideoSequence seq;
  seq.fps_num = fps_num;
  seq.fps_den = fps_den;
  for (std::size_t off = 0; off < data.size(); off += frame_bytes) {
    seq.frames.push_back(
        y4m_internal::UnpackFrame(data, off, width, height, layout));
  }
  return seq;
}

// -----------------------------------------------------------------------------
// File helpers

inline std::vector<std::uint8_t> ReadFileBytes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "failed reading " + path.string());
  return bytes;
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial `path`.
inline void WriteFileBytes(const std::filesystem::path& path,
                           std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "failed writing " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move output into " + path.string());
  }
}

inline void WriteFileText(const std::filesystem::path& path,
                          std::string_view text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(
                                     text.data()),
                                 text.size()));
}

inline VideoSequence ReadY4mFile(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  try {
    return ReadY4m(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.offset());
  }
}

}  // namespace grain
