#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srvc/adaptation.hpp"
#include "srvc/content_codec.hpp"
#include "srvc/model_stream.hpp"
#include "srvc/sr_model.hpp"
#include "srvc/video_io.hpp"

namespace srvc {

// Dense training of the initial model on the whole (decoded LR, HR) video.
struct InitialTraining {
  int epochs = 32;
  double lr = 1e-4;
  bool crop = true;
};

struct EncodeJob {
  VideoSequence source;               // HR input
  ModelConfig model;
  double tau = 5.0;                   // seconds; kOneShot selects one-shot mode
  TrainingConfig training;            // per-segment adaptation (eta lives here)
  InitialTraining initial;
  std::uint64_t init_seed = 1;
  std::string codec_id = "lossless";
  int quality = 0;
  ExternalCodecConfig external = ExternalCodecConfig::defaults();
  int target_height = 0;              // 0: source dimensions
  int target_width = 0;
  // Skips initial training when set (e.g. a model shared across jobs).
  std::optional<ParameterVector> initial_model;
  // When non-empty, progress is checkpointed here after every segment and a
  // matching checkpoint is resumed.
  std::filesystem::path checkpoint;
};

struct Manifest {
  double fps = 0.0;
  std::size_t frames = 0;
  int hr_width = 0;
  int hr_height = 0;
  int scale = 0;
  std::uint32_t tau_ms = kOneShotTauMs;
  std::string codec_id;
  int quality = 0;
  bool resized = false;  // final bicubic resize from k * LR to hr dims
  std::vector<std::pair<std::size_t, std::size_t>> segments;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct EncodedVideo {
  ContentStream content;
  std::vector<std::uint8_t> model;  // serialized model stream
  Manifest manifest;

  std::uint64_t content_bits() const noexcept { return 8ull * content.byte_count(); }
  std::uint64_t model_bits() const noexcept { return 8ull * model.size(); }
};

struct EncodeResult {
  EncodedVideo encoded;
  ParameterVector initial_trained;             // before binary16 rounding
  std::vector<std::uint64_t> state_hashes;     // transmitted state 0..N
  std::vector<SegmentTrainReport> reports;
};

EncodeResult encode(const EncodeJob& job);

struct DecodeResult {
  VideoSequence video;
  std::vector<std::uint64_t> state_hashes;  // replayed state 0..N
};

// Decodes frames [first, last) (default: all). Segment s (0-based) is
// upsampled with the state after update record s + 1; one-shot streams use
// the initial model throughout.
DecodeResult decode(const EncodedVideo& encoded, std::size_t first = 0,
                    std::size_t last = static_cast<std::size_t>(-1),
                    const ExternalCodecConfig& external = ExternalCodecConfig::defaults());

// (content_bits + model_bits) / (frames * height * width).
double bits_per_pixel(std::uint64_t content_bits, std::uint64_t model_bits, std::size_t frames, int height,
                      int width);

// Directory layout: content.bin, model.srvc, manifest.txt.
inline constexpr const char* kContentFile = "content.bin";
inline constexpr const char* kModelFile = "model.srvc";
inline constexpr const char* kManifestFile = "manifest.txt";

void save_encoded(const std::filesystem::path& dir, const EncodedVideo& encoded);
EncodedVideo load_encoded(const std::filesystem::path& dir);

std::string format_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text);

}  // namespace srvc
