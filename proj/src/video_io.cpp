#include "srvc/video_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "srvc/error.hpp"

namespace srvc {

namespace fs = std::filesystem;

Frame pad_edge(const Frame& frame, int height, int width) {
  if (height < frame.height() || width < frame.width()) {
    throw InvalidArgument("pad_edge target smaller than source");
  }
  if (height == frame.height() && width == frame.width()) return frame;
  Frame out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(y, frame.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(x, frame.width() - 1);
      for (int c = 0; c < kChannels; ++c) out.at(y, x, c) = frame.at(sy, sx, c);
    }
  }
  return out;
}

Frame area_downsample(const Frame& frame, int factor) {
  if (factor <= 0) throw InvalidArgument("downsample factor must be positive");
  if (frame.empty()) throw InvalidArgument("cannot downsample an empty frame");
  const int out_h = (frame.height() + factor - 1) / factor;
  const int out_w = (frame.width() + factor - 1) / factor;
  const Frame src = pad_edge(frame, out_h * factor, out_w * factor);

  Frame out(out_h, out_w);
  const double inv_area = 1.0 / (static_cast<double>(factor) * factor);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      for (int c = 0; c < kChannels; ++c) {
        double sum = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            sum += src.at(oy * factor + dy, ox * factor + dx, c);
          }
        }
        out.at(oy, ox, c) = static_cast<float>(sum * inv_area);
      }
    }
  }
  return out;
}

VideoSequence area_downsample(const VideoSequence& video, int factor) {
  VideoSequence out;
  out.fps = video.fps;
  out.frames.reserve(video.frames.size());
  for (const Frame& f : video.frames) out.frames.push_back(area_downsample(f, factor));
  return out;
}

std::size_t frames_per_segment(double tau, double fps) {
  if (std::isinf(tau)) return std::numeric_limits<std::size_t>::max();
  const double n = std::round(tau * fps);
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

SegmentPlan plan_segments(std::size_t frame_count, double fps, double tau) {
  if (frame_count == 0) throw InvalidArgument("cannot segment an empty video");
  if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive or infinite");
  SegmentPlan plan;
  plan.tau = tau;
  const std::size_t len = frames_per_segment(tau, fps);
  for (std::size_t begin = 0; begin < frame_count;) {
    const std::size_t end = (frame_count - begin > len) ? begin + len : frame_count;
    plan.boundaries.emplace_back(begin, end);
    begin = end;
  }
  return plan;
}

SegmentPlan plan_segments(const VideoSequence& video, double tau) {
  return plan_segments(video.frame_count(), video.fps, tau);
}

std::vector<std::uint8_t> to_planar_u8(const VideoSequence& video) {
  std::vector<std::uint8_t> bytes;
  if (video.frames.empty()) return bytes;
  const std::size_t plane = video.frames.front().pixel_count();
  bytes.resize(plane * kChannels * video.frames.size());
  std::size_t base = 0;
  for (const Frame& f : video.frames) {
    for (int c = 0; c < kChannels; ++c) {
      std::size_t i = base + plane * static_cast<std::size_t>(c);
      for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) bytes[i++] = to_u8(f.at(y, x, c));
      }
    }
    base += plane * kChannels;
  }
  return bytes;
}

VideoSequence from_planar_u8(std::span<const std::uint8_t> bytes, int width, int height,
                             std::size_t frames, double fps) {
  const std::size_t plane = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() != plane * kChannels * frames) {
    throw DecodeError("raw video size " + std::to_string(bytes.size()) +
                      " does not match geometry");
  }
  VideoSequence video;
  video.fps = fps;
  video.frames.reserve(frames);
  std::size_t base = 0;
  for (std::size_t n = 0; n < frames; ++n) {
    Frame f(height, width);
    for (int c = 0; c < kChannels; ++c) {
      std::size_t i = base + plane * static_cast<std::size_t>(c);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) f.at(y, x, c) = from_u8(bytes[i++]);
      }
    }
    video.frames.push_back(std::move(f));
    base += plane * kChannels;
  }
  return video;
}

void write_raw_header(const fs::path& header_path, const RawHeader& header) {
  std::ofstream out(header_path);
  if (!out) throw InvalidArgument("cannot write " + header_path.string());
  out.precision(17);
  out << "width=" << header.width << '\n'
      << "height=" << header.height << '\n'
      << "fps=" << header.fps << '\n'
      << "frames=" << header.frames << '\n';
}

RawHeader read_raw_header(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw InvalidArgument("cannot open " + header_path.string());
  RawHeader h;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "width") h.width = std::stoi(value);
    else if (key == "height") h.height = std::stoi(value);
    else if (key == "fps") h.fps = std::stod(value);
    else if (key == "frames") h.frames = std::stoull(value);
  }
  if (h.width < 1 || h.height < 1 || !(h.fps > 0.0)) {
    throw DecodeError("incomplete raw header " + header_path.string());
  }
  return h;
}

void write_raw_video(const fs::path& path, const VideoSequence& video) {
  video.validate();
  const auto bytes = to_planar_u8(video);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  write_raw_header(fs::path(path.string() + ".hdr"),
                   {video.width(), video.height(), video.fps, video.frame_count()});
}

namespace {

std::vector<std::uint8_t> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

VideoSequence read_raw_video(const fs::path& path) {
  const RawHeader h = read_raw_header(fs::path(path.string() + ".hdr"));
  const auto bytes = read_all(path);
  return from_planar_u8(bytes, h.width, h.height, h.frames, h.fps);
}

void write_ppm(const fs::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << "P6\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  std::vector<std::uint8_t> bytes(frame.size());
  std::transform(frame.data().begin(), frame.data().end(), bytes.begin(), to_u8);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Frame read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  auto next_token = [&in]() {
    std::string tok;
    while (tok.empty()) {
      int ch = in.get();
      if (ch == EOF) throw DecodeError("truncated PPM header");
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      while (ch != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
      }
    }
    return tok;
  };
  if (next_token() != "P6") throw DecodeError("not a binary PPM: " + path.string());
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  if (std::stoi(next_token()) != 255) throw DecodeError("only 8-bit PPM is supported");
  Frame f(height, width);
  std::vector<std::uint8_t> bytes(f.size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw DecodeError("truncated PPM pixel data: " + path.string());
  }
  std::transform(bytes.begin(), bytes.end(), f.data().begin(), from_u8);
  return f;
}

void write_image_sequence(const fs::path& dir, const VideoSequence& video,
                          std::size_t first_index) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    std::ostringstream name;
    name << "frame_";
    name.width(6);
    name.fill('0');
    name << (first_index + i) << ".ppm";
    write_ppm(dir / name.str(), video.frames[i]);
  }
}

VideoSequence read_image_sequence(const fs::path& dir, double fps) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  VideoSequence video;
  video.fps = fps;
  for (const auto& p : files) video.frames.push_back(read_ppm(p));
  video.validate();
  return video;
}

VideoSequence load_video(const fs::path& path, double fps_for_images) {
  if (fs::is_directory(path)) return read_image_sequence(path, fps_for_images);
  if (fs::exists(fs::path(path.string() + ".hdr"))) return read_raw_video(path);
  throw InvalidArgument("input is neither an image directory nor a raw video with header: " +
                        path.string());
}

}  // namespace srvc
