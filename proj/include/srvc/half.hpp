#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace srvc {

// IEEE binary16, round-to-nearest-even.
inline std::uint16_t to_half_bits(float v) noexcept {
  return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(v));
}

inline float from_half_bits(std::uint16_t bits) noexcept {
  return static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
}

inline float round_to_half(float v) noexcept { return from_half_bits(to_half_bits(v)); }

}  // namespace srvc
