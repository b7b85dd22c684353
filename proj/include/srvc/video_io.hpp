#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "srvc/frame.hpp"

namespace srvc {

inline constexpr double kOneShot = std::numeric_limits<double>::infinity();

// Replicates the last row/column until the frame is (height, width).
Frame pad_edge(const Frame& frame, int height, int width);

// Block-mean downsampling by an integer factor. Non-divisible frames are
// edge-padded up to the next multiple of `factor` first.
Frame area_downsample(const Frame& frame, int factor);
VideoSequence area_downsample(const VideoSequence& video, int factor);

struct SegmentPlan {
  double tau = kOneShot;
  std::vector<std::pair<std::size_t, std::size_t>> boundaries;  // half-open

  std::size_t count() const noexcept { return boundaries.size(); }
};

// Frames per full segment: round(tau * fps), at least one.
std::size_t frames_per_segment(double tau, double fps);

// Splits the video into consecutive windows of tau seconds; the remainder
// forms a short final segment. tau = kOneShot yields a single segment.
SegmentPlan plan_segments(std::size_t frame_count, double fps, double tau);
SegmentPlan plan_segments(const VideoSequence& video, double tau);

// Raw interchange: planar 8-bit RGB, frame-major, with a text sidecar at
// `path` + ".hdr" holding width, height, fps and frames as key=value lines.
struct RawHeader {
  int width = 0;
  int height = 0;
  double fps = 0.0;
  std::size_t frames = 0;
};

void write_raw_video(const std::filesystem::path& path, const VideoSequence& video);
VideoSequence read_raw_video(const std::filesystem::path& path);
RawHeader read_raw_header(const std::filesystem::path& header_path);
void write_raw_header(const std::filesystem::path& header_path, const RawHeader& header);

// Planar 8-bit bytes <-> frames, no header.
std::vector<std::uint8_t> to_planar_u8(const VideoSequence& video);
VideoSequence from_planar_u8(std::span<const std::uint8_t> bytes, int width, int height,
                             std::size_t frames, double fps);

// Binary PPM (P6, maxval 255) images and numbered image sequences.
void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path);
// Writes frame_000000.ppm, frame_000001.ppm, ... into `dir`.
void write_image_sequence(const std::filesystem::path& dir, const VideoSequence& video,
                          std::size_t first_index = 0);
// Reads every *.ppm in `dir` in lexicographic order.
VideoSequence read_image_sequence(const std::filesystem::path& dir, double fps);

// Accepts a raw file with sidecar header or a directory of PPM images.
VideoSequence load_video(const std::filesystem::path& path, double fps_for_images);

}  // namespace srvc
