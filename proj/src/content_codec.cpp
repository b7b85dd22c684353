#include "srvc/content_codec.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "srvc/bytes.hpp"
#include "srvc/error.hpp"
#include "srvc/video_io.hpp"

namespace srvc {

namespace fs = std::filesystem;

double ContentStream::bitrate() const {
  if (frame_count == 0) throw InvalidArgument("content stream has no frames");
  return 8.0 * static_cast<double>(byte_count()) * fps / static_cast<double>(frame_count);
}

namespace {

ContentStream stream_shell(const VideoSequence& v, std::string id, int quality) {
  v.validate();
  if (v.frames.empty()) throw InvalidArgument("cannot encode an empty video");
  ContentStream s;
  s.codec_id = std::move(id);
  s.quality = quality;
  s.lr_width = v.width();
  s.lr_height = v.height();
  s.frame_count = v.frame_count();
  s.fps = v.fps;
  return s;
}

std::size_t samples_of(const ContentStream& s) {
  return static_cast<std::size_t>(s.lr_width) * static_cast<std::size_t>(s.lr_height) * kChannels *
         s.frame_count;
}

int bits_for_levels(int levels) {
  int bits = 1;
  while ((1 << bits) < levels) ++bits;
  return bits;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("srvc-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

std::string expand(std::string tpl, const std::vector<std::pair<std::string, std::string>>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    for (auto pos = tpl.find(token); pos != std::string::npos; pos = tpl.find(token, pos + value.size())) {
      tpl.replace(pos, token.size(), value);
    }
  }
  return tpl;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

// Runs `command` through /bin/sh with stderr captured to a file.
void run_checked(const std::string& command, const fs::path& stderr_path) {
  const std::string full = command + " 2> " + shell_quote(stderr_path.string());
  const int status = std::system(full.c_str());
  if (status != 0) {
    std::string diag;
    if (fs::exists(stderr_path)) {
      auto bytes = read_file(stderr_path);
      diag.assign(bytes.begin(), bytes.end());
    }
    const int code = (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : status;
    throw CodecUnavailable("external codec command failed with status " + std::to_string(code) +
                               ": " + command,
                           diag);
  }
}

std::string encoder_path(const ExternalCodecConfig& cfg) {
  if (const char* env = std::getenv("SRVC_ENCODER"); env != nullptr && *env != '\0') return env;
  return cfg.encoder_binary;
}

std::string format_fps(double fps) {
  std::ostringstream os;
  os.precision(10);
  os << fps;
  return os.str();
}

}  // namespace

ContentStream LosslessCodec::encode(const VideoSequence& lr_video, int quality) const {
  ContentStream s = stream_shell(lr_video, id(), quality);
  ByteWriter w;
  for (const Frame& f : lr_video.frames) {
    for (float v : f.data()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      w.u32(bits);
    }
  }
  s.payload = w.take();
  return s;
}

VideoSequence LosslessCodec::decode(const ContentStream& stream) const {
  if (stream.payload.size() != samples_of(stream) * 4) {
    throw DecodeError("lossless payload size does not match stream geometry");
  }
  ByteReader r(stream.payload);
  VideoSequence v;
  v.fps = stream.fps;
  for (std::size_t n = 0; n < stream.frame_count; ++n) {
    Frame f(stream.lr_height, stream.lr_width);
    for (float& x : f.data()) {
      const std::uint32_t bits = r.u32();
      std::memcpy(&x, &bits, sizeof x);
    }
    v.frames.push_back(std::move(f));
  }
  return v;
}

float QuantizerCodec::reconstruct(float v, int levels) noexcept {
  const long q = std::clamp(std::lround(static_cast<double>(v) * levels), 0L, static_cast<long>(levels - 1));
  return static_cast<float>(static_cast<double>(q) / levels);
}

ContentStream QuantizerCodec::encode(const VideoSequence& lr_video, int quality) const {
  const int levels = quality == 0 ? kDefaultLevels : quality;
  if (levels < 2 || levels > 256) throw InvalidArgument("quantizer levels must be in [2, 256]");
  ContentStream s = stream_shell(lr_video, id(), levels);
  const int bits = bits_for_levels(levels);
  BitWriter w;
  for (const Frame& f : lr_video.frames) {
    for (float v : f.data()) {
      const long q = std::clamp(std::lround(static_cast<double>(v) * levels), 0L, static_cast<long>(levels - 1));
      w.put(static_cast<std::uint32_t>(q), bits);
    }
  }
  s.payload = w.take();
  return s;
}

VideoSequence QuantizerCodec::decode(const ContentStream& stream) const {
  const int levels = stream.quality;
  if (levels < 2 || levels > 256) throw DecodeError("bad quantizer level count");
  const int bits = bits_for_levels(levels);
  const std::size_t expect = (samples_of(stream) * static_cast<std::size_t>(bits) + 7) / 8;
  if (stream.payload.size() != expect) throw DecodeError("quantizer payload size does not match geometry");
  BitReader r(stream.payload);
  VideoSequence v;
  v.fps = stream.fps;
  for (std::size_t n = 0; n < stream.frame_count; ++n) {
    Frame f(stream.lr_height, stream.lr_width);
    for (float& x : f.data()) {
      const std::uint32_t q = r.get(bits);
      if (q >= static_cast<std::uint32_t>(levels)) throw DecodeError("quantizer level out of range");
      x = static_cast<float>(static_cast<double>(q) / levels);
    }
    v.frames.push_back(std::move(f));
  }
  return v;
}

ExternalCodecConfig ExternalCodecConfig::defaults() {
  ExternalCodecConfig c;
  // gbrp is ffmpeg's planar RGB layout. Our planes are R, G, B, so the codec
  // sees channels permuted; the decode template applies the same layout.
  c.encode_template =
      "{encoder} -y -loglevel error -f rawvideo -pix_fmt gbrp -s {width}x{height} -r {fps} "
      "-i {input} -c:v libx265 -preset slow -crf {quality} -f hevc {output}";
  c.decode_template = "{encoder} -y -loglevel error -f hevc -i {input} -f rawvideo -pix_fmt gbrp {output}";
  return c;
}

ContentStream ExternalCodec::encode(const VideoSequence& lr_video, int quality) const {
  ContentStream s = stream_shell(lr_video, id(), quality);
  TempDir tmp;
  const fs::path in = tmp.path() / "input.rgb";
  const fs::path out = tmp.path() / "output.bin";
  write_raw_video(in, lr_video);
  const std::string cmd = expand(config_.encode_template,
                                 {{"encoder", encoder_path(config_)},
                                  {"input", shell_quote(in.string())},
                                  {"output", shell_quote(out.string())},
                                  {"width", std::to_string(s.lr_width)},
                                  {"height", std::to_string(s.lr_height)},
                                  {"fps", format_fps(s.fps)},
                                  {"frames", std::to_string(s.frame_count)},
                                  {"quality", std::to_string(quality)}});
  run_checked(cmd, tmp.path() / "encode.stderr");
  if (!fs::exists(out)) throw CodecUnavailable("external encoder produced no output: " + cmd);
  s.payload = read_file(out);
  return s;
}

VideoSequence ExternalCodec::decode(const ContentStream& stream) const {
  TempDir tmp;
  const fs::path in = tmp.path() / "input.bin";
  const fs::path out = tmp.path() / "output.rgb";
  write_file(in, stream.payload);
  const std::string cmd = expand(config_.decode_template,
                                 {{"encoder", encoder_path(config_)},
                                  {"input", shell_quote(in.string())},
                                  {"output", shell_quote(out.string())},
                                  {"width", std::to_string(stream.lr_width)},
                                  {"height", std::to_string(stream.lr_height)},
                                  {"fps", format_fps(stream.fps)},
                                  {"frames", std::to_string(stream.frame_count)},
                                  {"quality", std::to_string(stream.quality)}});
  run_checked(cmd, tmp.path() / "decode.stderr");
  if (!fs::exists(out)) throw DecodeError("external decoder produced no output");
  const auto bytes = read_file(out);
  return from_planar_u8(bytes, stream.lr_width, stream.lr_height, stream.frame_count, stream.fps);
}

std::unique_ptr<ContentCodec> make_codec(const std::string& codec_id, const ExternalCodecConfig& external) {
  if (codec_id == "lossless") return std::make_unique<LosslessCodec>();
  if (codec_id == "quant") return std::make_unique<QuantizerCodec>();
  if (codec_id == "external") return std::make_unique<ExternalCodec>(external);
  throw InvalidArgument("unknown codec id '" + codec_id + "'");
}

ContentStream content_encode(const VideoSequence& lr_video, const std::string& codec_id, int quality,
                             const ExternalCodecConfig& external) {
  return make_codec(codec_id, external)->encode(lr_video, quality);
}

VideoSequence content_decode(const ContentStream& stream, const ExternalCodecConfig& external) {
  return make_codec(stream.codec_id, external)->decode(stream);
}

namespace {
constexpr std::uint8_t kContentMagic[4] = {'S', 'R', 'C', 'S'};
constexpr std::uint8_t kContentVersion = 1;
}  // namespace

std::vector<std::uint8_t> serialize_content(const ContentStream& s) {
  ByteWriter w;
  w.bytes(kContentMagic);
  w.u8(kContentVersion);
  w.str(s.codec_id);
  w.u32(static_cast<std::uint32_t>(s.quality));
  w.u32(static_cast<std::uint32_t>(s.lr_width));
  w.u32(static_cast<std::uint32_t>(s.lr_height));
  w.u64(s.frame_count);
  w.f64(s.fps);
  w.u64(s.payload.size());
  w.bytes(s.payload);
  return w.take();
}

ContentStream deserialize_content(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kContentMagic))) {
    throw FormatError("bad content stream magic");
  }
  if (r.u8() != kContentVersion) throw FormatError("unsupported content stream version");
  ContentStream s;
  s.codec_id = r.str();
  s.quality = static_cast<int>(r.u32());
  s.lr_width = static_cast<int>(r.u32());
  s.lr_height = static_cast<int>(r.u32());
  s.frame_count = r.u64();
  s.fps = r.f64();
  const std::uint64_t n = r.u64();
  const auto payload = r.bytes(n);
  s.payload.assign(payload.begin(), payload.end());
  if (!r.done()) throw DecodeError("trailing bytes after content payload");
  return s;
}

void write_content_file(const fs::path& path, const ContentStream& stream) {
  write_file(path, serialize_content(stream));
}

ContentStream read_content_file(const fs::path& path) {
  return deserialize_content(read_file(path));
}

}  // namespace srvc
