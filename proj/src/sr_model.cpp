#include "srvc/sr_model.hpp"

#include <cmath>
#include <random>

#include "srvc/error.hpp"

namespace srvc {

void ModelConfig::validate() const {
  if (features < 1 || patch < 1 || scale < 1 || gen_hidden < 1 || reg_hidden < 1) {
    throw InvalidArgument("model config fields must all be positive");
  }
}

ParamLayout ParamLayout::of(const ModelConfig& c) {
  c.validate();
  ParamLayout l;
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    TensorSlice s{at, n};
    at += n;
    return s;
  };
  const auto F = static_cast<std::size_t>(c.features);
  const auto Cg = static_cast<std::size_t>(c.gen_hidden);
  const auto Cr = static_cast<std::size_t>(c.reg_hidden);
  const auto out = static_cast<std::size_t>(c.shuffle_channels());
  l.gen1_w = take(3 * 3 * 3 * Cg);
  l.gen1_b = take(Cg);
  l.gen2_w = take(3 * 3 * Cg * 27 * F);
  l.gen2_b = take(27 * F);
  l.reg1_w = take(5 * 5 * F * Cr);
  l.reg1_b = take(Cr);
  l.reg2_w = take(3 * 3 * Cr * out);
  l.reg2_b = take(out);
  l.total = at;
  return l;
}

std::vector<std::pair<TensorSlice, std::size_t>> ParamLayout::tensors(const ModelConfig& c) const {
  const auto F = static_cast<std::size_t>(c.features);
  const auto Cg = static_cast<std::size_t>(c.gen_hidden);
  const auto Cr = static_cast<std::size_t>(c.reg_hidden);
  return {{gen1_w, 27},      {gen1_b, 0}, {gen2_w, 9 * Cg}, {gen2_b, 0},
          {reg1_w, 25 * F},  {reg1_b, 0}, {reg2_w, 9 * Cr}, {reg2_b, 0}};
}

std::size_t param_count(const ModelConfig& config) { return ParamLayout::of(config).total; }

ParameterVector init_parameters(const ModelConfig& config, std::uint64_t seed) {
  const ParamLayout layout = ParamLayout::of(config);
  ParameterVector params(layout.total, 0.0f);
  std::mt19937_64 rng(seed);
  for (const auto& [slice, fan_in] : layout.tensors(config)) {
    if (fan_in == 0) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < slice.size; ++i) {
      // 53-bit uniform in [0, 1); avoids distribution differences across
      // standard libraries.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      params[slice.offset + i] = static_cast<float>((2.0 * u - 1.0) * bound);
    }
  }
  return params;
}

FeatureMap FeatureMap::from_frame(const Frame& frame) {
  FeatureMap m(frame.height(), frame.width(), kChannels);
  std::copy(frame.data().begin(), frame.data().end(), m.data.begin());
  return m;
}

Frame FeatureMap::to_frame() const {
  if (channels != kChannels) throw InvalidArgument("feature map is not RGB");
  Frame f(height, width);
  std::copy(data.begin(), data.end(), f.data().begin());
  return f;
}

PatchGrid space_to_batch(const FeatureMap& map, int patch) {
  if (patch < 1) throw InvalidArgument("patch size must be positive");
  if (map.height < 1 || map.width < 1) throw InvalidArgument("space_to_batch on an empty map");
  PatchGrid g;
  g.patch = patch;
  g.channels = map.channels;
  g.grid_rows = (map.height + patch - 1) / patch;
  g.grid_cols = (map.width + patch - 1) / patch;
  g.pad_bottom = g.grid_rows * patch - map.height;
  g.pad_right = g.grid_cols * patch - map.width;
  g.patches.resize(static_cast<std::size_t>(g.count()) * g.patch_size());
  std::size_t i = 0;
  for (int r = 0; r < g.grid_rows; ++r) {
    for (int c = 0; c < g.grid_cols; ++c) {
      for (int py = 0; py < patch; ++py) {
        const int y = std::min(r * patch + py, map.height - 1);
        for (int px = 0; px < patch; ++px) {
          const int x = std::min(c * patch + px, map.width - 1);
          for (int ch = 0; ch < map.channels; ++ch) g.patches[i++] = map.at(y, x, ch);
        }
      }
    }
  }
  return g;
}

PatchGrid space_to_batch(const Frame& frame, int patch) {
  return space_to_batch(FeatureMap::from_frame(frame), patch);
}

FeatureMap batch_to_space(const PatchGrid& grid, int height, int width) {
  if (height > grid.grid_rows * grid.patch || width > grid.grid_cols * grid.patch || height < 1 || width < 1) {
    throw InvalidArgument("batch_to_space extent exceeds the patch grid");
  }
  FeatureMap m(height, width, grid.channels);
  const int p = grid.patch;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto tile = grid.tile((y / p) * grid.grid_cols + x / p);
      const std::size_t base = (static_cast<std::size_t>(y % p) * p + x % p) * grid.channels;
      for (int ch = 0; ch < grid.channels; ++ch) m.at(y, x, ch) = tile[base + ch];
    }
  }
  return m;
}

FeatureMap pixel_shuffle(const FeatureMap& features, int scale) {
  if (scale < 1) throw InvalidArgument("scale must be positive");
  const int kk = scale * scale;
  if (features.channels != kChannels * kk) {
    throw InvalidArgument("pixel_shuffle expects 3*k^2 channels, got " + std::to_string(features.channels));
  }
  FeatureMap out(features.height * scale, features.width * scale, kChannels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        out.at(y, x, c) = features.at(y / scale, x / scale, c * kk + (y % scale) * scale + x % scale);
      }
    }
  }
  return out;
}

FeatureMap space_to_depth(const FeatureMap& image, int scale) {
  if (scale < 1) throw InvalidArgument("scale must be positive");
  if (image.height % scale != 0 || image.width % scale != 0) {
    throw InvalidArgument("space_to_depth needs dimensions divisible by the scale");
  }
  const int kk = scale * scale;
  FeatureMap out(image.height / scale, image.width / scale, image.channels * kk);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        out.at(y / scale, x / scale, c * kk + (y % scale) * scale + x % scale) = image.at(y, x, c);
      }
    }
  }
  return out;
}

}  // namespace srvc
