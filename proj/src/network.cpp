#include "srvc/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "srvc/error.hpp"

namespace srvc {

namespace {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ConstMap = Eigen::Map<const Mat<T>>;
template <class T>
using RowMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

// Stride-1 "same" convolution columns for a batch of n images (h, w, c).
// Taps outside an image read zero, so tiles never see their neighbours.
// Column order is (ky, kx, channel), matching the weight layout.
template <class T>
void im2col(const T* in, int n, int h, int w, int c, int k, Mat<T>& col) {
  const int r = k / 2;
  col.setZero(static_cast<Eigen::Index>(n) * h * w, static_cast<Eigen::Index>(k) * k * c);
  for (int img = 0; img < n; ++img) {
    const T* base = in + static_cast<std::size_t>(img) * h * w * c;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        T* dst = col.row((static_cast<Eigen::Index>(img) * h + y) * w + x).data();
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - r;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int sx = x + kx - r;
            if (sx < 0 || sx >= w) continue;
            std::copy_n(base + (static_cast<std::size_t>(sy) * w + sx) * c, c, dst + (ky * k + kx) * c);
          }
        }
      }
    }
  }
}

// Adjoint of im2col; accumulates into `out` (n, h, w, c).
template <class T>
void col2im(const Mat<T>& col, int n, int h, int w, int c, int k, T* out) {
  const int r = k / 2;
  for (int img = 0; img < n; ++img) {
    T* base = out + static_cast<std::size_t>(img) * h * w * c;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const T* src = col.row((static_cast<Eigen::Index>(img) * h + y) * w + x).data();
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - r;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int sx = x + kx - r;
            if (sx < 0 || sx >= w) continue;
            T* dst = base + (static_cast<std::size_t>(sy) * w + sx) * c;
            const T* s = src + (ky * k + kx) * c;
            for (int ch = 0; ch < c; ++ch) dst[ch] += s[ch];
          }
        }
      }
    }
  }
}

template <class T>
Mat<T> relu(const Mat<T>& m) {
  return m.cwiseMax(T(0));
}

template <class T>
Mat<T> relu_grad(const Mat<T>& grad, const Mat<T>& pre) {
  return (pre.array() > T(0)).select(grad, T(0));
}

template <class T>
struct Weights {
  ConstMap<T> gen1_w, gen2_w, reg1_w, reg2_w;
  RowMap<T> gen1_b, gen2_b, reg1_b, reg2_b;

  Weights(const T* p, const ParamLayout& l, const ModelConfig& c)
      : gen1_w(p + l.gen1_w.offset, 27, c.gen_hidden),
        gen2_w(p + l.gen2_w.offset, 9 * c.gen_hidden, c.kernel_size()),
        reg1_w(p + l.reg1_w.offset, 25 * c.features, c.reg_hidden),
        reg2_w(p + l.reg2_w.offset, 9 * c.reg_hidden, c.shuffle_channels()),
        gen1_b(p + l.gen1_b.offset, c.gen_hidden),
        gen2_b(p + l.gen2_b.offset, c.kernel_size()),
        reg1_b(p + l.reg1_b.offset, c.reg_hidden),
        reg2_b(p + l.reg2_b.offset, c.shuffle_channels()) {}
};

// Intermediate activations of one forward pass, kept for backprop.
template <class T>
struct Activations {
  int height = 0, width = 0;  // LR extent
  int grid_rows = 0, grid_cols = 0;
  Mat<T> col_x;   // (N P^2) x 27, tile columns of the input
  Mat<T> pre1;    // (N P^2) x C_g
  Mat<T> pooled;  // N x 9 C_g, tile-mean of generator layer-2 columns
  Mat<T> kernels; // N x 27F
  Mat<T> ypre;    // (N P^2) x F, adaptive conv before relu
  Mat<T> col5;    // HW x 25F
  Mat<T> pre3;    // HW x C_r
  Mat<T> col3;    // HW x 9 C_r
  Mat<T> out;     // HW x 3k^2
};

// Tiles from `frame` into a contiguous [N][P][P][3] buffer.
template <class T>
std::vector<T> tiles_of(const Frame& frame, int patch, int& rows, int& cols) {
  const PatchGrid grid = space_to_batch(frame, patch);
  rows = grid.grid_rows;
  cols = grid.grid_cols;
  return std::vector<T>(grid.patches.begin(), grid.patches.end());
}

// Layer-2 generator columns averaged over each tile's P x P positions. The
// layer is affine, so pooling its output equals applying it to these means.
template <class T>
Mat<T> pooled_columns(const Mat<T>& h1, int n, int patch, int hidden) {
  Mat<T> pooled = Mat<T>::Zero(n, 9 * hidden);
  const int area = patch * patch;
  for (int t = 0; t < n; ++t) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        auto dst = pooled.row(t).segment((ky * 3 + kx) * hidden, hidden);
        for (int y = 0; y < patch; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= patch) continue;
          for (int x = 0; x < patch; ++x) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= patch) continue;
            dst += h1.row(static_cast<Eigen::Index>(t) * area + sy * patch + sx);
          }
        }
      }
    }
  }
  pooled /= static_cast<T>(area);
  return pooled;
}

// Kernel generation and adaptive convolution for a batch of tiles.
template <class T>
void run_adaptive_block(const T* tiles, int n, const Weights<T>& wts, const ModelConfig& cfg,
                        Activations<T>& act) {
  const int p = cfg.patch;
  const int area = p * p;
  im2col(tiles, n, p, p, kChannels, 3, act.col_x);
  act.pre1 = act.col_x * wts.gen1_w;
  act.pre1.rowwise() += wts.gen1_b;
  act.pooled = pooled_columns<T>(relu(act.pre1), n, p, cfg.gen_hidden);
  act.kernels = act.pooled * wts.gen2_w;
  act.kernels.rowwise() += wts.gen2_b;

  act.ypre.resize(static_cast<Eigen::Index>(n) * area, cfg.features);
  for (int t = 0; t < n; ++t) {
    ConstMap<T> kernel(act.kernels.row(t).data(), 27, cfg.features);
    act.ypre.middleRows(static_cast<Eigen::Index>(t) * area, area).noalias() =
        act.col_x.middleRows(static_cast<Eigen::Index>(t) * area, area) * kernel;
  }
}

template <class T>
void run_forward(const Frame& lr, std::span<const T> params, const ModelConfig& cfg, Activations<T>& act) {
  cfg.validate();
  const ParamLayout layout = ParamLayout::of(cfg);
  if (params.size() != layout.total) {
    throw InvalidArgument("parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                          std::to_string(layout.total));
  }
  if (lr.empty()) throw InvalidArgument("forward on an empty frame");
  const Weights<T> wts(params.data(), layout, cfg);
  const int p = cfg.patch;
  const int area = p * p;
  act.height = lr.height();
  act.width = lr.width();

  const std::vector<T> tiles = tiles_of<T>(lr, p, act.grid_rows, act.grid_cols);
  const int n = act.grid_rows * act.grid_cols;
  run_adaptive_block(tiles.data(), n, wts, cfg, act);

  // batch-to-space of relu(ypre), dropping padded positions
  const int h = act.height, w = act.width, f = cfg.features;
  Mat<T> feat(static_cast<Eigen::Index>(h) * w, f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int tile = (y / p) * act.grid_cols + x / p;
      feat.row(static_cast<Eigen::Index>(y) * w + x) =
          act.ypre.row(static_cast<Eigen::Index>(tile) * area + (y % p) * p + x % p).cwiseMax(T(0));
    }
  }

  im2col(feat.data(), 1, h, w, f, 5, act.col5);
  act.pre3 = act.col5 * wts.reg1_w;
  act.pre3.rowwise() += wts.reg1_b;
  const Mat<T> h3 = relu(act.pre3);
  im2col(h3.data(), 1, h, w, cfg.reg_hidden, 3, act.col3);
  act.out = act.col3 * wts.reg2_w;
  act.out.rowwise() += wts.reg2_b;
}

// Pixel shuffle of act.out into an interleaved (kH, kW, 3) buffer.
template <class T>
std::vector<T> shuffle_output(const Activations<T>& act, int k) {
  const int h = act.height, w = act.width;
  const int hw = w * k;
  std::vector<T> out(static_cast<std::size_t>(h) * k * hw * kChannels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const T* src = act.out.row(static_cast<Eigen::Index>(y) * w + x).data();
      for (int c = 0; c < kChannels; ++c) {
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            out[((static_cast<std::size_t>(y) * k + dy) * hw + (x * k + dx)) * kChannels + c] =
                src[c * k * k + dy * k + dx];
          }
        }
      }
    }
  }
  return out;
}

template <class T>
void accumulate(std::span<T> grad, const TensorSlice& slice, const Mat<T>& value, T weight) {
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dst(grad.data() + slice.offset,
                                                      static_cast<Eigen::Index>(slice.size));
  dst += weight * Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(value.data(), value.size());
}

// Backprop of d(loss)/d(out) through the whole network.
template <class T>
void run_backward(const Activations<T>& act, const Mat<T>& d_out, std::span<const T> params,
                  const ModelConfig& cfg, std::span<T> grad, T weight) {
  const ParamLayout layout = ParamLayout::of(cfg);
  const Weights<T> wts(params.data(), layout, cfg);
  const int h = act.height, w = act.width, p = cfg.patch, area = p * p;
  const int n = act.grid_rows * act.grid_cols;

  // regular block, layer 2
  accumulate<T>(grad, layout.reg2_w, act.col3.transpose() * d_out, weight);
  accumulate<T>(grad, layout.reg2_b, d_out.colwise().sum(), weight);
  const Mat<T> d_col3 = d_out * wts.reg2_w.transpose();
  Mat<T> d_h3 = Mat<T>::Zero(static_cast<Eigen::Index>(h) * w, cfg.reg_hidden);
  col2im(d_col3, 1, h, w, cfg.reg_hidden, 3, d_h3.data());
  const Mat<T> d_pre3 = relu_grad(d_h3, act.pre3);

  // regular block, layer 1
  accumulate<T>(grad, layout.reg1_w, act.col5.transpose() * d_pre3, weight);
  accumulate<T>(grad, layout.reg1_b, d_pre3.colwise().sum(), weight);
  const Mat<T> d_col5 = d_pre3 * wts.reg1_w.transpose();
  Mat<T> d_feat = Mat<T>::Zero(static_cast<Eigen::Index>(h) * w, cfg.features);
  col2im(d_col5, 1, h, w, cfg.features, 5, d_feat.data());

  // space-to-batch of the feature gradient; padded positions receive none
  Mat<T> d_y = Mat<T>::Zero(static_cast<Eigen::Index>(n) * area, cfg.features);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int tile = (y / p) * act.grid_cols + x / p;
      d_y.row(static_cast<Eigen::Index>(tile) * area + (y % p) * p + x % p) =
          d_feat.row(static_cast<Eigen::Index>(y) * w + x);
    }
  }
  const Mat<T> d_ypre = relu_grad(d_y, act.ypre);

  // adaptive convolution -> generated kernels
  Mat<T> d_kernels(n, cfg.kernel_size());
  for (int t = 0; t < n; ++t) {
    Eigen::Map<Mat<T>> dk(d_kernels.row(t).data(), 27, cfg.features);
    dk.noalias() = act.col_x.middleRows(static_cast<Eigen::Index>(t) * area, area).transpose() *
                   d_ypre.middleRows(static_cast<Eigen::Index>(t) * area, area);
  }

  // generator layer 2 (pooled)
  accumulate<T>(grad, layout.gen2_w, act.pooled.transpose() * d_kernels, weight);
  accumulate<T>(grad, layout.gen2_b, d_kernels.colwise().sum(), weight);
  const Mat<T> d_pooled = (d_kernels * wts.gen2_w.transpose()) / static_cast<T>(area);

  const int hidden = cfg.gen_hidden;
  Mat<T> d_h1 = Mat<T>::Zero(static_cast<Eigen::Index>(n) * area, hidden);
  for (int t = 0; t < n; ++t) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const auto src = d_pooled.row(t).segment((ky * 3 + kx) * hidden, hidden);
        for (int y = 0; y < p; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= p) continue;
          for (int x = 0; x < p; ++x) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= p) continue;
            d_h1.row(static_cast<Eigen::Index>(t) * area + sy * p + sx) += src;
          }
        }
      }
    }
  }
  const Mat<T> d_pre1 = relu_grad(d_h1, act.pre1);

  // generator layer 1
  accumulate<T>(grad, layout.gen1_w, act.col_x.transpose() * d_pre1, weight);
  accumulate<T>(grad, layout.gen1_b, d_pre1.colwise().sum(), weight);
}

template <class T>
T loss_impl(const Frame& lr, const Frame& hr, std::span<const T> params, const ModelConfig& cfg,
            std::span<T> grad, T weight, bool want_grad) {
  const int k = cfg.scale;
  if (hr.height() != lr.height() * k || hr.width() != lr.width() * k) {
    throw InvalidArgument("HR frame must be exactly k times the LR frame");
  }
  Activations<T> act;
  run_forward(lr, params, cfg, act);
  const std::vector<T> raw = shuffle_output(act, k);

  const double n = static_cast<double>(hr.pixel_count());
  const auto target = hr.data();
  double sum = 0.0;
  Mat<T> d_out;
  if (want_grad) d_out.setZero(static_cast<Eigen::Index>(act.height) * act.width, cfg.shuffle_channels());
  const int hw = act.width * k;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const T z = raw[i];
    const T y = std::clamp(z, T(0), T(1));
    const T diff = y - static_cast<T>(target[i]);
    sum += static_cast<double>(diff) * static_cast<double>(diff);
    if (want_grad && z >= T(0) && z <= T(1)) {
      const std::size_t pix = i / kChannels;
      const int c = static_cast<int>(i % kChannels);
      const int oy = static_cast<int>(pix / static_cast<std::size_t>(hw));
      const int ox = static_cast<int>(pix % static_cast<std::size_t>(hw));
      d_out(static_cast<Eigen::Index>(oy / k) * act.width + ox / k, c * k * k + (oy % k) * k + ox % k) =
          static_cast<T>(2.0 * static_cast<double>(diff) / n);
    }
  }
  if (want_grad) {
    if (grad.size() != params.size()) throw InvalidArgument("gradient buffer size mismatch");
    run_backward(act, d_out, params, cfg, grad, weight);
  }
  return static_cast<T>(sum / n);
}

}  // namespace

template <class T>
std::vector<T> forward_raw(const Frame& lr, std::span<const T> params, const ModelConfig& config) {
  Activations<T> act;
  run_forward(lr, params, config, act);
  return shuffle_output(act, config.scale);
}

template <class T>
T frame_loss(const Frame& lr, const Frame& hr, std::span<const T> params, const ModelConfig& config) {
  return loss_impl<T>(lr, hr, params, config, {}, T(1), false);
}

template <class T>
T frame_loss_and_gradient(const Frame& lr, const Frame& hr, std::span<const T> params,
                          const ModelConfig& config, std::span<T> grad, T weight) {
  return loss_impl<T>(lr, hr, params, config, grad, weight, true);
}

template std::vector<float> forward_raw<float>(const Frame&, std::span<const float>, const ModelConfig&);
template std::vector<double> forward_raw<double>(const Frame&, std::span<const double>, const ModelConfig&);
template float frame_loss<float>(const Frame&, const Frame&, std::span<const float>, const ModelConfig&);
template double frame_loss<double>(const Frame&, const Frame&, std::span<const double>, const ModelConfig&);
template float frame_loss_and_gradient<float>(const Frame&, const Frame&, std::span<const float>,
                                              const ModelConfig&, std::span<float>, float);
template double frame_loss_and_gradient<double>(const Frame&, const Frame&, std::span<const double>,
                                                const ModelConfig&, std::span<double>, double);

namespace {

void check_tile(std::span<const float> patch, std::span<const float> params, const ModelConfig& cfg) {
  cfg.validate();
  if (patch.size() != static_cast<std::size_t>(cfg.patch) * cfg.patch * kChannels) {
    throw InvalidArgument("tile must be P x P x 3");
  }
  if (params.size() != param_count(cfg)) throw InvalidArgument("parameter vector length mismatch");
}

}  // namespace

std::vector<float> generate_kernel(std::span<const float> patch, std::span<const float> params,
                                   const ModelConfig& config) {
  check_tile(patch, params, config);
  Activations<float> act;
  run_adaptive_block(patch.data(), 1, Weights<float>(params.data(), ParamLayout::of(config), config), config,
                     act);
  return {act.kernels.data(), act.kernels.data() + act.kernels.size()};
}

std::vector<float> adaptive_conv_block(std::span<const float> patch, std::span<const float> params,
                                       const ModelConfig& config) {
  check_tile(patch, params, config);
  Activations<float> act;
  run_adaptive_block(patch.data(), 1, Weights<float>(params.data(), ParamLayout::of(config), config), config,
                     act);
  const Mat<float> y = relu(act.ypre);
  return {y.data(), y.data() + y.size()};
}

Frame forward(const Frame& lr, std::span<const float> params, const ModelConfig& config) {
  const std::vector<float> raw = forward_raw<float>(lr, params, config);
  Frame out(lr.height() * config.scale, lr.width() * config.scale);
  std::transform(raw.begin(), raw.end(), out.data().begin(), [](float v) { return std::clamp(v, 0.0f, 1.0f); });
  return out;
}

}  // namespace srvc
