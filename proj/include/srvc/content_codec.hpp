#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "srvc/frame.hpp"

namespace srvc {

// Encoded low-resolution video. Rate accounting uses payload bytes only.
struct ContentStream {
  std::string codec_id;
  int quality = 0;
  int lr_width = 0;
  int lr_height = 0;
  std::size_t frame_count = 0;
  double fps = 0.0;
  std::vector<std::uint8_t> payload;

  std::size_t byte_count() const noexcept { return payload.size(); }
  // 8 * bytes * fps / frames.
  double bitrate() const;
};

// Command templates for the external encoder. Placeholders: {encoder},
// {input}, {output}, {width}, {height}, {fps}, {frames}, {quality}.
// {encoder} expands to $SRVC_ENCODER when set, else `encoder_binary`.
struct ExternalCodecConfig {
  std::string encoder_binary = "ffmpeg";
  std::string encode_template;
  std::string decode_template;

  static ExternalCodecConfig defaults();
};

class ContentCodec {
 public:
  virtual ~ContentCodec() = default;
  virtual std::string id() const = 0;
  virtual ContentStream encode(const VideoSequence& lr_video, int quality) const = 0;
  virtual VideoSequence decode(const ContentStream& stream) const = 0;
};

// Stores float32 samples verbatim; decode(encode(v)) == v.
class LosslessCodec final : public ContentCodec {
 public:
  std::string id() const override { return "lossless"; }
  ContentStream encode(const VideoSequence& lr_video, int quality) const override;
  VideoSequence decode(const ContentStream& stream) const override;
};

// Uniform scalar quantizer with `quality` levels (2..256, default 16).
// Sample v maps to q = clamp(round(v * L), 0, L - 1) and reconstructs as q / L.
class QuantizerCodec final : public ContentCodec {
 public:
  static constexpr int kDefaultLevels = 16;
  std::string id() const override { return "quant"; }
  ContentStream encode(const VideoSequence& lr_video, int quality) const override;
  VideoSequence decode(const ContentStream& stream) const override;

  static float reconstruct(float v, int levels) noexcept;
};

// Runs an external encoder/decoder as subprocesses over the raw planar
// interchange format (see write_raw_video).
class ExternalCodec final : public ContentCodec {
 public:
  explicit ExternalCodec(ExternalCodecConfig config = ExternalCodecConfig::defaults())
      : config_(std::move(config)) {}
  std::string id() const override { return "external"; }
  ContentStream encode(const VideoSequence& lr_video, int quality) const override;
  VideoSequence decode(const ContentStream& stream) const override;

 private:
  ExternalCodecConfig config_;
};

// "lossless", "quant" or "external". Unknown ids throw InvalidArgument.
std::unique_ptr<ContentCodec> make_codec(const std::string& codec_id,
                                         const ExternalCodecConfig& external = ExternalCodecConfig::defaults());

ContentStream content_encode(const VideoSequence& lr_video, const std::string& codec_id, int quality,
                             const ExternalCodecConfig& external = ExternalCodecConfig::defaults());
VideoSequence content_decode(const ContentStream& stream,
                             const ExternalCodecConfig& external = ExternalCodecConfig::defaults());

// Container file: "SRCS" magic, version, codec id, geometry, fps, payload.
std::vector<std::uint8_t> serialize_content(const ContentStream& stream);
ContentStream deserialize_content(std::span<const std::uint8_t> bytes);
void write_content_file(const std::filesystem::path& path, const ContentStream& stream);
ContentStream read_content_file(const std::filesystem::path& path);

}  // namespace srvc
