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

// Subcommands of the grain_model tool. Each Cmd* returns a process exit code
// and never leaves partially written outputs behind.

#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "grain/core_types.hpp"
#include "grain/denoise.hpp"
#include "grain/encoder_hook.hpp"
#include "grain/metrics.hpp"
#include "grain/model_bitstream.hpp"
#include "grain/noise_analysis.hpp"
#include "grain/noise_synthesis.hpp"
#include "grain/pipeline.hpp"
#include "grain/video_io.hpp"

namespace grain::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;
/// Noise videos store N + 128, rounded and clamped to 0..255.
inline constexpr double kNoiseVideoOffset = 128.0;

// -----------------------------------------------------------------------------
// Inputs

/// A Y4M path, or a headerless planar file when `raw_size` ("WxH") is set.
struct VideoInput {
  std::string path;
  std::string raw_size;
  std::string raw_layout = "420";
  std::string raw_fps = "30:1";
};

inline ChromaLayout ParseLayoutName(const std::string& s) {
  if (s == "420") return ChromaLayout::k420;
  if (s == "444") return ChromaLayout::k444;
  if (s == "mono") return ChromaLayout::kMono;
  throw Error(ErrorCode::kInvalidArgument, "unknown layout '" + s + "'");
}

inline VideoSequence LoadVideo(const VideoInput& in) {
  if (in.raw_size.empty()) return ReadY4mFile(in.path);
  int w = 0, h = 0;
  std::uint32_t num = 0, den = 0;
  char x = 0, colon = 0;
  std::istringstream size(in.raw_size), fps(in.raw_fps);
  if (!(size >> w >> x >> h) || x != 'x' || w < 1 || h < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "raw size must look like 1920x1080, got '" + in.raw_size + "'");
  }
  if (!(fps >> num >> colon >> den) || colon != ':') {
    throw Error(ErrorCode::kInvalidArgument,
                "frame rate must look like 30:1, got '" + in.raw_fps + "'");
  }
  const auto bytes = ReadFileBytes(in.path);
  return ReadRawPlanar(bytes, w, h, ParseLayoutName(in.raw_layout), num, den);
}

inline Frame NoiseLayerToFrame(const NoiseLayer& layer) {
  Frame f;
  f.layout = layer.layout;
  for (const NoisePlane& n : layer.planes) {
    Plane p(n.width(), n.height());
    for (std::size_t i = 0; i < n.size(); ++i) {
      p.samples()[i] = static_cast<std::uint8_t>(std::clamp(
          std::round(n.samples()[i] + kNoiseVideoOffset), 0.0, 255.0));
    }
    f.planes.push_back(std::move(p));
  }
  return f;
}

inline NoiseLayer FrameToNoiseLayer(const Frame& frame) {
  NoiseLayer layer;
  layer.layout = frame.layout;
  for (const Plane& p : frame.planes) {
    NoisePlane n(p.width(), p.height());
    for (std::size_t i = 0; i < p.size(); ++i) {
      n.samples()[i] = p.samples()[i] - kNoiseVideoOffset;
    }
    layer.planes.push_back(std::move(n));
  }
  return layer;
}

// -----------------------------------------------------------------------------
// Output staging

/// Collects outputs in memory and writes them only once everything has been
/// computed; a failed write removes the files already written.
class OutputSet {
 public:
  void Add(fs::path path, std::vector<std::uint8_t> bytes) {
    files_.push_back({std::move(path), std::move(bytes)});
  }
  void AddText(fs::path path, const std::string& text) {
    Add(std::move(path), std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  void Commit() {
    std::vector<fs::path> written;
    try {
      for (const auto& [path, bytes] : files_) {
        WriteFileBytes(path, bytes);
        written.push_back(path);
      }
    } catch (...) {
      std::error_code ec;
      for (const fs::path& p : written) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<fs::path, std::vector<std::uint8_t>>> files_;
};

template <typename Fn>
int Guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline std::string BitrateCsv(const BitrateReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "fps,channels,frames,se_kbps,sde_kbps,total_kbps\n"
      << r.fps << ',' << r.channels << ',' << r.frames << ',' << r.se_kbps
      << ',' << r.sde_kbps << ',' << r.total_kbps << '\n';
  return out.str();
}

inline json BitrateJson(const BitrateReport& r) {
  return {{"fps", r.fps},           {"channels", r.channels},
          {"frames", r.frames},     {"se_kbps", r.se_kbps},
          {"sde_kbps", r.sde_kbps}, {"total_kbps", r.total_kbps}};
}

/// Mean log-spectral distance between the energy-normalized noise and an
/// envelope; nullopt when the signal is shorter than one window.
inline std::optional<double> EnvelopeDistance(const NoisePlane& noise,
                                              const EnergyMap& sde,
                                              const SpectralEnvelope& envelope,
                                              Direction d, int window,
                                              double epsilon) {
  if (noise.size() < static_cast<std::size_t>(window)) return std::nullopt;
  const NoisePlane normalized = NormalizeNoise(noise, sde, epsilon);
  std::vector<double> pg = Periodogram(normalized, d, window);
  for (double v : pg) {
    if (!(v > 0.0)) return std::nullopt;
  }
  return LogSpectralDistance(
      pg, EnvelopeSpectrum(envelope, static_cast<int>(pg.size())));
}

// -----------------------------------------------------------------------------
// denoise

struct DenoiseOptions {
  VideoInput in;
  std::string out;
  DenoiseConfig cfg;
  std::optional<int> threads;
};

inline int CmdDenoise(const DenoiseOptions& o, std::ostream& out,
                      std::ostream& err) {
  return Guarded(err, [&] {
    o.cfg.Validate();
    const VideoSequence seq = LoadVideo(o.in);
    const VideoSequence base =
        DenoiseSequence(seq, o.cfg, ResolveThreads(o.threads));
    OutputSet outputs;
    outputs.Add(o.out, WriteY4m(base));
    outputs.Commit();
    out << "denoised " << base.frames.size() << " frames -> " << o.out << '\n';
    return 0;
  });
}

// -----------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  VideoInput in;
  VideoInput base;
  std::string out;
  std::string noise_out;  // optional noise video (N + 128)
  ModelConfig cfg;
  bool embed_seed = false;
  std::optional<int> threads;
};

inline int CmdAnalyze(const AnalyzeOptions& o, std::ostream& out,
                      std::ostream& err) {
  return Guarded(err, [&] {
    o.cfg.Validate();
    const VideoSequence noisy = LoadVideo(o.in);
    const VideoSequence base = LoadVideo(o.base);
    const SequenceAnalysis analysis = AnalyzeSequence(
        noisy, base, o.cfg, o.embed_seed, ResolveThreads(o.threads));
    OutputSet outputs;
    outputs.Add(o.out, Serialize(analysis.stream));
    if (!o.noise_out.empty()) {
      VideoSequence noise;
      noise.fps_num = noisy.fps_num;
      noise.fps_den = noisy.fps_den;
      for (std::size_t f = 0; f < noisy.frames.size(); ++f) {
        noise.frames.push_back(NoiseLayerToFrame(
            ExtractNoiseLayer(noisy.frames[f], base.frames[f])));
      }
      outputs.Add(o.noise_out, WriteY4m(noise));
    }
    outputs.Commit();
    out << BitrateCsv(ModelBitrateReport(analysis.stream));
    return 0;
  });
}

// -----------------------------------------------------------------------------
// synthesize

struct SynthesizeOptions {
  std::string model;
  VideoInput base;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

inline int CmdSynthesize(const SynthesizeOptions& o, std::ostream& out,
                         std::ostream& err) {
  return Guarded(err, [&] {
    const auto bytes = ReadFileBytes(o.model);
    ModelStream stream;
    try {
      stream = Deserialize(bytes);
    } catch (const Error& e) {
      throw Error(e.code(), o.model + ": " + e.what(), e.offset());
    }
    const VideoSequence base = LoadVideo(o.base);
    const VideoSequence rec =
        Reconstruct(stream, base, EffectiveSeed(stream.header, o.seed),
                    ResolveThreads(o.threads));
    OutputSet outputs;
    outputs.Add(o.out, WriteY4m(rec));
    outputs.Commit();
    out << "synthesized " << rec.frames.size() << " frames -> " << o.out
        << '\n';
    return 0;
  });
}

// -----------------------------------------------------------------------------
// roundtrip

struct RoundtripOptions {
  VideoInput in;
  std::string out;
  std::string report;      // JSON, defaults to <out>.json
  std::string model_out;   // optional copy of the PNM1 stream
  std::string encoder_cmd;
  double encoder_timeout = 600.0;
  DenoiseConfig denoise;
  ModelConfig model;
  bool embed_seed = false;
  std::optional<std::uint64_t> seed;
  int spectrum_window = 256;
  std::optional<int> threads;
};

/// Sends `base` through the hook and reads back the decoded video.
inline VideoSequence RunBaseCodec(const EncoderHook& hook,
                                  const VideoSequence& base) {
  const fs::path dir =
      fs::temp_directory_path() /
      ("grain_hook_" + std::to_string(getpid()) + "_" +
       std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{dir};
  const fs::path in = dir / "base.y4m";
  const fs::path decoded = dir / "decoded.y4m";
  WriteFileBytes(in, WriteY4m(base));
  hook.Run(in, decoded, dir / "hook.log");
  if (!fs::exists(decoded)) {
    throw Error(ErrorCode::kHookFailure,
                "encoder command did not write its {out} file");
  }
  VideoSequence result = ReadY4mFile(decoded);
  if (result.frames.size() != base.frames.size() ||
      !result.frames[0].same_geometry(base.frames[0])) {
    throw Error(ErrorCode::kHookFailure,
                "decoded base video differs in geometry or frame count");
  }
  return result;
}

inline int CmdRoundtrip(const RoundtripOptions& o, std::ostream& out,
                        std::ostream& err) {
  return Guarded(err, [&] {
    o.denoise.Validate();
    o.model.Validate();
    std::optional<EncoderHook> hook;
    if (!o.encoder_cmd.empty()) hook.emplace(o.encoder_cmd, o.encoder_timeout);
    const int threads = ResolveThreads(o.threads);

    const VideoSequence input = LoadVideo(o.in);
    const VideoSequence base = DenoiseSequence(input, o.denoise, threads);
    const SequenceAnalysis analysis =
        AnalyzeSequence(input, base, o.model, o.embed_seed, threads);
    const std::vector<std::uint8_t> stream_bytes = Serialize(analysis.stream);

    // Decoder side: everything below sees only the serialized stream.
    const ModelStream decoded = Deserialize(stream_bytes);
    const VideoSequence decoded_base = hook ? RunBaseCodec(*hook, base) : base;
    const std::uint64_t seed = EffectiveSeed(decoded.header, o.seed);
    const std::vector<NoiseLayer> noise =
        SynthesizeNoise(decoded, seed, threads, o.model.sde_epsilon);
    VideoSequence rec;
    rec.fps_num = decoded_base.fps_num;
    rec.fps_den = decoded_base.fps_den;
    for (std::size_t f = 0; f < noise.size(); ++f) {
      rec.frames.push_back(Recombine(decoded_base.frames[f], noise[f]));
    }

    // Energy fidelity of the synthesized layer against the encoder's
    // unquantized maps, and envelope agreement on luma.
    const auto geometry = StreamChannelGeometry(decoded.header);
    MapError worst;
    double mean_rel = 0.0, quant_bound = 0.0;
    std::size_t maps = 0;
    double lsd_sum[2] = {0.0, 0.0};
    std::size_t lsd_count[2] = {0, 0};
    double psnr_sum = 0.0;
    bool base_identical = true;
    for (std::size_t f = 0; f < noise.size(); ++f) {
      const FrameNoiseModel dq = DequantizeFrameModel(
          decoded.frames[f], geometry, kStreamLarRange);
      const NoiseLayer original =
          ExtractNoiseLayer(input.frames[f], base.frames[f]);
      for (std::size_t c = 0; c < noise[f].planes.size(); ++c) {
        const EnergyMap& ref = analysis.models[f].channels[c].sde;
        const EnergyMap measured = ComputeSde(noise[f].planes[c], ref.beta);
        const MapError e = BlockRmsError(measured, ref, o.model.sde_epsilon);
        worst.max_relative = std::max(worst.max_relative, e.max_relative);
        worst.max_absolute = std::max(worst.max_absolute, e.max_absolute);
        mean_rel += e.mean_relative;
        quant_bound = std::max(
            quant_bound, double{decoded.frames[f].channels[c].sde.scale} / 510.0);
        ++maps;
      }
      const Direction dirs[2] = {Direction::kHorizontal, Direction::kVertical};
      for (int d = 0; d < 2; ++d) {
        const SpectralEnvelope& env = d == 0 ? dq.channels[0].horizontal
                                             : dq.channels[0].vertical;
        if (auto lsd = EnvelopeDistance(original.planes[0],
                                        analysis.models[f].channels[0].sde, env,
                                        dirs[d], o.spectrum_window,
                                        o.model.sde_epsilon)) {
          lsd_sum[d] += *lsd;
          ++lsd_count[d];
        }
      }
      const double p =
          Psnr(base.frames[f].planes[0], decoded_base.frames[f].planes[0]);
      if (std::isfinite(p)) {
        base_identical = false;
        psnr_sum += p;
      }
    }

    json report;
    report["schema"] = "grain-model-roundtrip";
    report["version"] = kReportSchemaVersion;
    report["geometry"] = {{"width", input.width()},
                          {"height", input.height()},
                          {"layout", ColorspaceTag(input.layout())},
                          {"fps_num", input.fps_num},
                          {"fps_den", input.fps_den},
                          {"frames", input.frames.size()}};
    report["model"] = {{"beta", o.model.beta},
                       {"order", o.model.order},
                       {"seed", seed},
                       {"stream_bytes", stream_bytes.size()}};
    report["bitrate_kbps"] = BitrateJson(ModelBitrateReport(decoded));
    report["sde_error"] = {
        {"max_relative", worst.max_relative},
        {"mean_relative", maps ? mean_rel / maps : 0.0},
        {"max_absolute", worst.max_absolute},
        {"quantizer_bound", quant_bound},
        {"within_quantizer_bound",
         worst.max_absolute <= quant_bound * (1 + 1e-6) + 1e-9}};
    json spectra = json::array();
    for (int d = 0; d < 2; ++d) {
      spectra.push_back(
          {{"channel", 0},
           {"direction", d == 0 ? "horizontal" : "vertical"},
           {"window", o.spectrum_window},
           {"mean_lsd_db", lsd_count[d] ? json(lsd_sum[d] / lsd_count[d])
                                        : json(nullptr)}});
    }
    report["spectra"] = spectra;
    report["base_layer"] = {
        {"encoder_cmd", hook ? json(hook->command_template()) : json(nullptr)},
        {"luma_psnr_db",
         base_identical ? json(nullptr) : json(psnr_sum / noise.size())}};

    OutputSet outputs;
    outputs.Add(o.out, WriteY4m(rec));
    const std::string report_path =
        o.report.empty() ? o.out + ".json" : o.report;
    outputs.AddText(report_path, report.dump(2) + "\n");
    if (!o.model_out.empty()) outputs.Add(o.model_out, stream_bytes);
    outputs.Commit();
    out << report.dump(2) << '\n';
    return 0;
  });
}

// -----------------------------------------------------------------------------
// report

struct ReportOptions {
  std::string model;
  std::string noise;        // optional noise video (N + 128)
  std::string out_prefix = "report";
  int frame = 0;
  int channel = 0;
  int window = 256;
};

inline int CmdReport(const ReportOptions& o, std::ostream& out,
                     std::ostream& err) {
  return Guarded(err, [&] {
    const auto bytes = ReadFileBytes(o.model);
    ModelStream stream;
    try {
      stream = Deserialize(bytes);
    } catch (const Error& e) {
      throw Error(e.code(), o.model + ": " + e.what(), e.offset());
    }
    const BitrateReport rates = ModelBitrateReport(stream);
    json summary;
    summary["schema"] = "grain-model-report";
    summary["version"] = kReportSchemaVersion;
    summary["bitrate_kbps"] = BitrateJson(rates);

    OutputSet outputs;
    const std::string csv = BitrateCsv(rates);
    outputs.AddText(o.out_prefix + "_bitrate.csv", csv);
    if (!o.noise.empty()) {
      const VideoSequence video = ReadY4mFile(o.noise);
      CheckStreamMatchesVideo(stream.header, video);
      if (o.frame < 0 || static_cast<std::size_t>(o.frame) >= video.frames.size()) {
        throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
      }
      if (o.channel < 0 ||
          static_cast<std::size_t>(o.channel) >= video.frames[0].planes.size()) {
        throw Error(ErrorCode::kInvalidArgument, "channel index out of range");
      }
      const auto f = static_cast<std::size_t>(o.frame);
      const auto c = static_cast<std::size_t>(o.channel);
      const FrameNoiseModel model = DequantizeFrameModel(
          stream.frames[f], StreamChannelGeometry(stream.header),
          kStreamLarRange);
      const NoisePlane noise = FrameToNoiseLayer(video.frames[f]).planes[c];
      if (std::all_of(noise.samples().begin(), noise.samples().end(),
                      [](double v) { return v == 0.0; })) {
        throw Error(ErrorCode::kDegenerateSignal,
                    "noise frame " + std::to_string(f) + " channel " +
                        std::to_string(c) + " is all zero; no spectrum");
      }
      const NoisePlane normalized =
          NormalizeNoise(noise, model.channels[c].sde, 1e-6);
      json spectra = json::array();
      for (Direction d : {Direction::kHorizontal, Direction::kVertical}) {
        const SpectralEnvelope& env = d == Direction::kHorizontal
                                          ? model.channels[c].horizontal
                                          : model.channels[c].vertical;
        const SpectrumReport r = MakeSpectrumReport(normalized, env, d, o.window);
        outputs.AddText(o.out_prefix + "_spectrum_" + ToString(d) + ".csv",
                        SpectrumCsv(r));
        spectra.push_back({{"direction", ToString(d)},
                           {"frame", o.frame},
                           {"channel", o.channel},
                           {"window", o.window},
                           {"log_spectral_distance_db",
                            r.log_spectral_distance}});
      }
      summary["spectra"] = spectra;
    }
    outputs.AddText(o.out_prefix + "_summary.json", summary.dump(2) + "\n");
    outputs.Commit();
    out << csv;
    return 0;
  });
}

// -----------------------------------------------------------------------------
// Argument parsing

inline void AddVideoInput(CLI::App* app, VideoInput& in, const std::string& flag,
                          const std::string& help) {
  app->add_option(flag, in.path, help)->required();
  app->add_option("--raw-size", in.raw_size,
                  "Read headerless planar input of this size (WxH)");
  app->add_option("--raw-layout", in.raw_layout,
                  "Layout of raw input: 420, 444 or mono")
      ->check(CLI::IsMember({"420", "444", "mono"}));
  app->add_option("--fps", in.raw_fps, "Frame rate of raw input (num:den)");
}

inline void AddDenoiseFlags(CLI::App* app, DenoiseConfig& cfg) {
  app->add_option("--k-frames", cfg.k_frames, "Temporal radius K")
      ->check(CLI::Range(1, 64));
  app->add_option("--block", cfg.block, "Motion block size")
      ->check(CLI::Range(4, 256));
  app->add_option("--search-radius", cfg.search_radius, "Motion search radius")
      ->check(CLI::Range(1, 128));
  app->add_option("--lambda", cfg.lambda,
                  "Similarity decay in per-pixel SAD units")
      ->check(CLI::PositiveNumber);
}

inline void AddModelFlags(CLI::App* app, ModelConfig& cfg, bool& embed_seed) {
  app->add_option("--beta", cfg.beta, "Energy-map block size")
      ->check(CLI::Range(2, 65535));
  app->add_option("--order", cfg.order, "Prediction order p")
      ->check(CLI::Range(1, 32));
  app->add_option("--sde-epsilon", cfg.sde_epsilon, "Zero-energy guard")
      ->check(CLI::PositiveNumber);
  app->add_flag("--embed-seed", embed_seed,
                "Write the master seed into the stream header");
}

/// Entry point shared by the binary and the tests.
inline int Run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Two-layer video coding with a parametric noise model"};
  app.require_subcommand(1);
  std::optional<int> threads;
  app.add_option("--threads", threads,
                 "Worker threads (default: GRAIN_MODEL_THREADS or 1)")
      ->check(CLI::Range(1, 1024));

  DenoiseOptions dn;
  auto* denoise = app.add_subcommand("denoise", "Extract the base layer");
  AddVideoInput(denoise, dn.in, "--in", "Input video");
  denoise->add_option("--out", dn.out, "Denoised Y4M")->required();
  AddDenoiseFlags(denoise, dn.cfg);

  AnalyzeOptions an;
  std::optional<std::uint64_t> analyze_seed;
  auto* analyze = app.add_subcommand("analyze", "Model the noise layer");
  AddVideoInput(analyze, an.in, "--in", "Noisy input video");
  analyze->add_option("--base", an.base.path, "Denoised base video")
      ->required();
  analyze->add_option("--out", an.out, "PNM1 model stream")->required();
  analyze->add_option("--noise-out", an.noise_out,
                      "Also write the noise layer as Y4M (N + 128)");
  analyze->add_option("--seed", analyze_seed,
                      "Master seed to embed (implies --embed-seed)");
  AddModelFlags(analyze, an.cfg, an.embed_seed);

  SynthesizeOptions sy;
  auto* synthesize =
      app.add_subcommand("synthesize", "Add synthesized noise to a base video");
  synthesize->add_option("--model", sy.model, "PNM1 model stream")->required();
  synthesize->add_option("--base", sy.base.path, "Decoded base video")
      ->required();
  synthesize->add_option("--out", sy.out, "Reconstructed Y4M")->required();
  synthesize->add_option("--seed", sy.seed,
                         "Master seed (default: stream seed or 0)");

  RoundtripOptions rt;
  auto* roundtrip = app.add_subcommand(
      "roundtrip", "Denoise, model, code the base layer and resynthesize");
  AddVideoInput(roundtrip, rt.in, "--in", "Input video");
  roundtrip->add_option("--out", rt.out, "Reconstructed Y4M")->required();
  roundtrip->add_option("--report", rt.report,
                        "JSON report path (default: <out>.json)");
  roundtrip->add_option("--model-out", rt.model_out, "Keep the PNM1 stream");
  roundtrip->add_option("--encoder-cmd", rt.encoder_cmd,
                        "Base-layer codec command with {in} and {out}");
  roundtrip->add_option("--encoder-timeout", rt.encoder_timeout,
                        "Codec timeout in seconds")
      ->check(CLI::PositiveNumber);
  roundtrip->add_option("--seed", rt.seed, "Master seed");
  roundtrip->add_option("--spectrum-window", rt.spectrum_window,
                        "Periodogram window length")
      ->check(CLI::IsMember({16, 32, 64, 128, 256, 512, 1024, 2048}));
  AddDenoiseFlags(roundtrip, rt.denoise);
  AddModelFlags(roundtrip, rt.model, rt.embed_seed);

  ReportOptions rp;
  auto* report = app.add_subcommand("report", "Bitrate and spectrum reports");
  report->add_option("--model", rp.model, "PNM1 model stream")->required();
  report->add_option("--noise", rp.noise, "Noise video (N + 128) for spectra");
  report->add_option("--out-prefix", rp.out_prefix, "Output file prefix");
  report->add_option("--frame", rp.frame, "Frame for spectra")
      ->check(CLI::NonNegativeNumber);
  report->add_option("--channel", rp.channel, "Channel for spectra")
      ->check(CLI::Range(0, 2));
  report->add_option("--window", rp.window, "Periodogram window length")
      ->check(CLI::IsMember({16, 32, 64, 128, 256, 512, 1024, 2048}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  if (denoise->parsed()) {
    dn.threads = threads;
    return CmdDenoise(dn, out, err);
  }
  if (analyze->parsed()) {
    an.threads = threads;
    an.base.raw_size = an.in.raw_size;
    an.base.raw_layout = an.in.raw_layout;
    an.base.raw_fps = an.in.raw_fps;
    if (analyze_seed) {
      an.cfg.master_seed = *analyze_seed;
      an.embed_seed = true;
    }
    return CmdAnalyze(an, out, err);
  }
  if (synthesize->parsed()) {
    sy.threads = threads;
    return CmdSynthesize(sy, out, err);
  }
  if (roundtrip->parsed()) {
    rt.threads = threads;
    if (rt.seed && rt.embed_seed) rt.model.master_seed = *rt.seed;
    return CmdRoundtrip(rt, out, err);
  }
  return CmdReport(rp, out, err);
}

}  // namespace grain::cli
