#include "srvc/frame.hpp"

#include <algorithm>
#include <cmath>

#include "srvc/error.hpp"

namespace srvc {

Frame::Frame(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw InvalidArgument("frame dimensions must be positive");
  }
  data_.assign(pixel_count() * kChannels, fill);
}

std::uint8_t to_u8(float v) noexcept {
  const float scaled = std::clamp(v, 0.0f, 1.0f) * 255.0f;
  // std::round rounds half away from zero.
  return static_cast<std::uint8_t>(std::round(scaled));
}

void clamp_unit(Frame& frame) noexcept {
  for (float& v : frame.data()) v = std::clamp(v, 0.0f, 1.0f);
}

void VideoSequence::validate() const {
  if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
  for (const Frame& f : frames) {
    if (!f.same_shape(frames.front())) {
      throw InvalidArgument("all frames of a video must share dimensions");
    }
  }
}

VideoSequence VideoSequence::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > frames.size()) throw InvalidArgument("slice out of range");
  VideoSequence out;
  out.fps = fps;
  out.frames.assign(frames.begin() + static_cast<std::ptrdiff_t>(begin),
                    frames.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

}  // namespace srvc
