#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "srvc/frame.hpp"

namespace srvc {

// Hyperparameters of the patch-adaptive SR network.
struct ModelConfig {
  int features = 32;     // F: output channels of the adaptive conv block
  int patch = 5;         // P: patch side in LR pixels
  int scale = 4;         // k: integer upscale factor
  int gen_hidden = 256;  // C_g: hidden width of the kernel generator
  int reg_hidden = 128;  // C_r: hidden width of the regular block

  // Throws InvalidArgument unless every field is positive.
  void validate() const;
  int kernel_size() const noexcept { return 27 * features; }
  int shuffle_channels() const noexcept { return kChannels * scale * scale; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Location of one tensor inside the flat parameter vector.
struct TensorSlice {
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Canonical parameter ordering. Convolution weights are stored as a
// row-major (ky, kx, in_channel) x out_channel matrix; each bias follows its
// weight tensor.
//
//   gen1   3x3 conv, 3 -> C_g      (kernel generator, layer 1)
//   gen2   3x3 conv, C_g -> 27F    (kernel generator, layer 2, mean-pooled)
//   reg1   5x5 conv, F -> C_r      (regular block, layer 1)
//   reg2   3x3 conv, C_r -> 3k^2   (regular block, layer 2)
//
// A generated kernel is 27F values laid out as (ky, kx, in_channel) x F.
// Output channel c*k^2 + dy*k + dx of reg2 becomes HR pixel offset (dy, dx),
// color c after the pixel shuffle.
struct ParamLayout {
  TensorSlice gen1_w, gen1_b, gen2_w, gen2_b, reg1_w, reg1_b, reg2_w, reg2_b;
  std::size_t total = 0;

  static ParamLayout of(const ModelConfig& config);
  // Slices in canonical order, paired with their fan-in (0 for biases).
  std::vector<std::pair<TensorSlice, std::size_t>> tensors(const ModelConfig& config) const;
};

std::size_t param_count(const ModelConfig& config);

// Master weights: 32-bit floats in canonical order.
using ParameterVector = std::vector<float>;

// Weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), biases zero.
ParameterVector init_parameters(const ModelConfig& config, std::uint64_t seed);

// Dense (height, width, channels) map, channels innermost.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c) {}
  static FeatureMap from_frame(const Frame& frame);
  Frame to_frame() const;

  float& at(int y, int x, int c) noexcept {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const noexcept {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// Non-overlapping P x P tiles, row-major over the grid. Stored as
// [patch][py][px][channel].
struct PatchGrid {
  int patch = 0;
  int channels = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  int pad_bottom = 0;
  int pad_right = 0;
  std::vector<float> patches;

  int count() const noexcept { return grid_rows * grid_cols; }
  std::size_t patch_size() const noexcept {
    return static_cast<std::size_t>(patch) * patch * channels;
  }
  std::span<const float> tile(int index) const noexcept {
    return std::span<const float>(patches).subspan(static_cast<std::size_t>(index) * patch_size(), patch_size());
  }
};

// Edge-replicates up to a multiple of P, then tiles.
PatchGrid space_to_batch(const FeatureMap& map, int patch);
PatchGrid space_to_batch(const Frame& frame, int patch);
// Reassembles tiles and strips padding back to (height, width).
FeatureMap batch_to_space(const PatchGrid& grid, int height, int width);

// Per-patch 3x3x3xF kernel from a P x P x 3 tile.
std::vector<float> generate_kernel(std::span<const float> patch, std::span<const float> params,
                                   const ModelConfig& config);
// relu(generate_kernel(x) * x) over the tile, zero padding at the tile edge.
// Returns P x P x F.
std::vector<float> adaptive_conv_block(std::span<const float> patch, std::span<const float> params,
                                       const ModelConfig& config);

// Depth-to-space: (H, W, C k^2) -> (kH, kW, C), C = 3.
FeatureMap pixel_shuffle(const FeatureMap& features, int scale);
// Inverse of pixel_shuffle.
FeatureMap space_to_depth(const FeatureMap& image, int scale);

// Full SR forward pass; output is (k H, k W) and clamped to [0, 1].
Frame forward(const Frame& lr, std::span<const float> params, const ModelConfig& config);

}  // namespace srvc
