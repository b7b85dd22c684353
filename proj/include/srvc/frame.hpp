#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace srvc {

inline constexpr int kChannels = 3;

// RGB raster with interleaved (row, column, channel) storage. Intensities are
// real-valued in [0, 1].
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width, float fill = 0.0f);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const Frame& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// 8-bit conversion; round-half-away-from-zero on the 255 scale.
std::uint8_t to_u8(float v) noexcept;
inline float from_u8(std::uint8_t v) noexcept { return static_cast<float>(v) / 255.0f; }

// Clamp every intensity into [0, 1].
void clamp_unit(Frame& frame) noexcept;

struct VideoSequence {
  std::vector<Frame> frames;
  double fps = 30.0;

  std::size_t frame_count() const noexcept { return frames.size(); }
  int height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }
  int width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }

  // Throws InvalidArgument when frames disagree on dimensions or fps <= 0.
  void validate() const;

  VideoSequence slice(std::size_t begin, std::size_t end) const;
};

}  // namespace srvc
