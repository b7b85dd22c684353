#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "srvc/frame.hpp"
#include "srvc/sr_model.hpp"

namespace srvc::fixtures {

inline Frame random_frame(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Frame f(h, w);
  for (float& v : f.data()) v = u(rng);
  return f;
}

inline Frame constant_frame(int h, int w, float value) { return Frame(h, w, value); }

// A ~47k parameter model small enough for CPU training in tests.
inline ModelConfig tiny_config() { return ModelConfig{8, 4, 4, 16, 24}; }

// A few hundred parameters; for exhaustive or many-trial tests.
inline ModelConfig micro_config(int scale = 2) { return ModelConfig{2, 4, scale, 3, 4}; }

// Periodic colour texture translating by (0.7, 0.3) px per frame. With
// `scene_change`, the second half of the frames shows a different texture.
inline VideoSequence moving_texture(int frames, int h, int w, double fps, bool scene_change = false) {
  VideoSequence v;
  v.fps = fps;
  for (int t = 0; t < frames; ++t) {
    Frame f(h, w);
    const bool second = scene_change && t >= frames / 2;
    const double ox = 0.7 * t, oy = 0.3 * t;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double X = x + ox, Y = y + oy;
        for (int c = 0; c < kChannels; ++c) {
          double val;
          if (!second) {
            val = 0.5 + 0.2 * std::sin(2 * M_PI * (X / 16.0 + Y / 23.0) + c) +
                  0.15 * std::sin(2 * M_PI * (X / 7.0 - Y / 9.0) + 2 * c) + 0.1 * std::sin(2 * M_PI * Y / 5.0 + 0.5 * c);
          } else {
            val = 0.5 + 0.25 * std::sin(2 * M_PI * (X / 11.0 - Y / 13.0) + 2 * c) +
                  0.15 * (((static_cast<int>(X / 6) + static_cast<int>(Y / 6)) % 2) ? 1.0 : -1.0);
          }
          f.at(y, x, c) = static_cast<float>(std::clamp(val, 0.0, 1.0));
        }
      }
    }
    v.frames.push_back(std::move(f));
  }
  return v;
}

// Same frame repeated.
inline VideoSequence static_scene(int frames, int h, int w, double fps) {
  VideoSequence moving = moving_texture(1, h, w, fps);
  VideoSequence v;
  v.fps = fps;
  v.frames.assign(static_cast<std::size_t>(frames), moving.frames.front());
  return v;
}

}  // namespace srvc::fixtures
