#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "srvc/error.hpp"
#include "srvc/network.hpp"
#include "srvc/sr_model.hpp"
#include "test_util.hpp"

using namespace srvc;

namespace {

// Plain nested-loop "same" convolution with zero padding. Weight layout
// (ky, kx, ci) x co, bias per co. Input/output are (h, w, c) interleaved.
std::vector<double> naive_conv(const std::vector<double>& in, int h, int w, int ci, const float* weight,
                               const float* bias, int k, int co) {
  std::vector<double> out(static_cast<std::size_t>(h) * w * co);
  const int r = k / 2;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int o = 0; o < co; ++o) {
        double s = bias ? bias[o] : 0.0;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx)
            for (int c = 0; c < ci; ++c) {
              const int sy = y + ky - r, sx = x + kx - r;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              s += static_cast<double>(weight[((ky * k + kx) * ci + c) * co + o]) *
                   in[(static_cast<std::size_t>(sy) * w + sx) * ci + c];
            }
        out[(static_cast<std::size_t>(y) * w + x) * co + o] = s;
      }
  return out;
}

void relu_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::max(0.0, x);
}

std::vector<double> naive_kernel(const std::vector<double>& tile, const ParameterVector& p, const ModelConfig& cfg) {
  const ParamLayout l = ParamLayout::of(cfg);
  auto h1 = naive_conv(tile, cfg.patch, cfg.patch, 3, &p[l.gen1_w.offset], &p[l.gen1_b.offset], 3, cfg.gen_hidden);
  relu_inplace(h1);
  const auto h2 = naive_conv(h1, cfg.patch, cfg.patch, cfg.gen_hidden, &p[l.gen2_w.offset], &p[l.gen2_b.offset], 3,
                             cfg.kernel_size());
  std::vector<double> k(cfg.kernel_size(), 0.0);
  const int area = cfg.patch * cfg.patch;
  for (int i = 0; i < area; ++i)
    for (int j = 0; j < cfg.kernel_size(); ++j) k[j] += h2[static_cast<std::size_t>(i) * cfg.kernel_size() + j] / area;
  return k;
}

std::vector<double> naive_adaptive(const std::vector<double>& tile, const ParameterVector& p, const ModelConfig& cfg) {
  const auto k = naive_kernel(tile, p, cfg);
  std::vector<double> out(static_cast<std::size_t>(cfg.patch) * cfg.patch * cfg.features);
  for (int y = 0; y < cfg.patch; ++y)
    for (int x = 0; x < cfg.patch; ++x)
      for (int f = 0; f < cfg.features; ++f) {
        double s = 0.0;
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx)
            for (int c = 0; c < 3; ++c) {
              const int sy = y + ky - 1, sx = x + kx - 1;
              if (sy < 0 || sy >= cfg.patch || sx < 0 || sx >= cfg.patch) continue;
              s += k[((ky * 3 + kx) * 3 + c) * cfg.features + f] * tile[(sy * cfg.patch + sx) * 3 + c];
            }
        out[(static_cast<std::size_t>(y) * cfg.patch + x) * cfg.features + f] = std::max(0.0, s);
      }
  return out;
}

// Straight-line re-implementation of the whole forward composition.
Frame naive_forward(const Frame& lr, const ParameterVector& p, const ModelConfig& cfg) {
  const int h = lr.height(), w = lr.width(), P = cfg.patch, F = cfg.features, k = cfg.scale;
  std::vector<double> feat(static_cast<std::size_t>(h) * w * F);
  for (int ty = 0; ty * P < h; ++ty)
    for (int tx = 0; tx * P < w; ++tx) {
      std::vector<double> tile(static_cast<std::size_t>(P) * P * 3);
      for (int y = 0; y < P; ++y)
        for (int x = 0; x < P; ++x)
          for (int c = 0; c < 3; ++c)
            tile[(y * P + x) * 3 + c] = lr.at(std::min(ty * P + y, h - 1), std::min(tx * P + x, w - 1), c);
      const auto out = naive_adaptive(tile, p, cfg);
      for (int y = 0; y < P; ++y)
        for (int x = 0; x < P; ++x) {
          const int gy = ty * P + y, gx = tx * P + x;
          if (gy >= h || gx >= w) continue;
          for (int f = 0; f < F; ++f)
            feat[(static_cast<std::size_t>(gy) * w + gx) * F + f] = out[(y * P + x) * F + f];
        }
    }
  const ParamLayout l = ParamLayout::of(cfg);
  auto r1 = naive_conv(feat, h, w, F, &p[l.reg1_w.offset], &p[l.reg1_b.offset], 5, cfg.reg_hidden);
  relu_inplace(r1);
  const auto r2 = naive_conv(r1, h, w, cfg.reg_hidden, &p[l.reg2_w.offset], &p[l.reg2_b.offset], 3, 3 * k * k);
  Frame out(k * h, k * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) {
            const double v = r2[(static_cast<std::size_t>(y) * w + x) * 3 * k * k + c * k * k + dy * k + dx];
            out.at(y * k + dy, x * k + dx, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
  return out;
}

// Random params scaled so activations stay in a useful range.
ParameterVector random_params(const ModelConfig& cfg, std::uint64_t seed, float bias = 0.05f) {
  ParameterVector p = init_parameters(cfg, seed);
  std::mt19937_64 rng(seed + 99);
  std::uniform_real_distribution<float> u(-bias, bias);
  const ParamLayout l = ParamLayout::of(cfg);
  for (TensorSlice s : {l.gen1_b, l.gen2_b, l.reg1_b, l.reg2_b})
    for (std::size_t i = 0; i < s.size; ++i) p[s.offset + i] = u(rng);
  // Lift the output bias so few pixels clamp.
  for (std::size_t i = 0; i < l.reg2_b.size; ++i) p[l.reg2_b.offset + i] += 0.5f;
  return p;
}

std::vector<float> tile_of(const Frame& f) { return {f.data().begin(), f.data().end()}; }

}  // namespace

TEST(ParamCount, MatchesAnalyticTable) {
  ModelConfig c;
  c.features = 8;
  EXPECT_EQ(param_count(c), 586120u);
  c.features = 32;
  EXPECT_EQ(param_count(c), 2156560u);
  c.features = 128;
  EXPECT_EQ(param_count(c), 8438320u);
}

TEST(ParamCount, WithinFivePercentOfReportedSizes) {
  const std::pair<int, double> table[] = {{8, 0.59e6}, {16, 1.14e6}, {32, 2.22e6}, {64, 4.39e6}, {128, 8.72e6}};
  for (auto [f, reported] : table) {
    ModelConfig c;
    c.features = f;
    EXPECT_NEAR(static_cast<double>(param_count(c)) / reported, 1.0, 0.05) << "F=" << f;
  }
}

TEST(ParamCount, LayoutIsContiguous) {
  const ModelConfig c = fixtures::tiny_config();
  const ParamLayout l = ParamLayout::of(c);
  std::size_t next = 0;
  for (auto [slice, fan_in] : l.tensors(c)) {
    EXPECT_EQ(slice.offset, next);
    next += slice.size;
  }
  EXPECT_EQ(next, l.total);
  EXPECT_EQ(l.total, param_count(c));
}

TEST(ModelConfig, RejectsNonPositive) {
  ModelConfig c;
  c.patch = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(param_count(c), InvalidArgument);
}

TEST(Init, DeterministicAndBounded) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector a = init_parameters(c, 5), b = init_parameters(c, 5), d = init_parameters(c, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, d);
  const ParamLayout l = ParamLayout::of(c);
  for (auto [slice, fan_in] : l.tensors(c)) {
    const float bound = fan_in ? std::sqrt(6.0f / fan_in) : 0.0f;
    for (std::size_t i = 0; i < slice.size; ++i) EXPECT_LE(std::abs(a[slice.offset + i]), bound);
  }
}

TEST(SpaceToBatch, DivisibleFrameNoPadding) {
  const PatchGrid g = space_to_batch(fixtures::random_frame(10, 10, 1), 5);
  EXPECT_EQ(g.count(), 4);
  EXPECT_EQ(g.pad_bottom, 0);
  EXPECT_EQ(g.pad_right, 0);
}

TEST(SpaceToBatch, NonDivisibleFramePadsByReplication) {
  const Frame f = fixtures::random_frame(11, 11, 2);
  const PatchGrid g = space_to_batch(f, 5);
  EXPECT_EQ(g.count(), 9);
  EXPECT_EQ(g.pad_bottom, 4);
  EXPECT_EQ(g.pad_right, 4);
  // Bottom-right tile position (4, 4) replicates the frame corner.
  const auto t = g.tile(8);
  EXPECT_EQ(t[(4 * 5 + 4) * 3 + 1], f.at(10, 10, 1));
}

TEST(SpaceToBatch, RoundTripIsIdentity) {
  const Frame f = fixtures::random_frame(13, 7, 3);
  const FeatureMap back = batch_to_space(space_to_batch(f, 5), 13, 7);
  EXPECT_EQ(back.to_frame(), f);
}

TEST(KernelGenerator, ZeroGeneratorGivesZeroKernel) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p(param_count(c), 0.0f);
  const auto k = generate_kernel(tile_of(fixtures::random_frame(c.patch, c.patch, 4)), p, c);
  ASSERT_EQ(k.size(), static_cast<std::size_t>(27 * c.features));
  for (float v : k) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(ModelConfig{}.kernel_size(), 864);
}

TEST(KernelGenerator, DifferentPatchesGiveDifferentKernels) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p = random_params(c, 8);
  const auto a = generate_kernel(tile_of(fixtures::random_frame(c.patch, c.patch, 1)), p, c);
  const auto b = generate_kernel(tile_of(fixtures::random_frame(c.patch, c.patch, 2)), p, c);
  double maxdiff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) maxdiff = std::max(maxdiff, static_cast<double>(std::abs(a[i] - b[i])));
  EXPECT_GT(maxdiff, 0.0);
}

TEST(KernelGenerator, MatchesPooledConvolutionOracle) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p = random_params(c, 9);
  const Frame tile = fixtures::random_frame(c.patch, c.patch, 3);
  const auto k = generate_kernel(tile_of(tile), p, c);
  const auto oracle = naive_kernel(std::vector<double>(tile.data().begin(), tile.data().end()), p, c);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(k[i], oracle[i], 1e-5);
}

TEST(AdaptiveConv, ZeroKernelGivesZeroFeatures) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p(param_count(c), 0.0f);
  for (float v : adaptive_conv_block(tile_of(fixtures::random_frame(c.patch, c.patch, 4)), p, c)) EXPECT_EQ(v, 0.0f);
}

TEST(AdaptiveConv, SinglePixelPatchUsesCentreTaps) {
  ModelConfig c{3, 1, 2, 4, 4};
  ParameterVector p(param_count(c), 0.0f);
  const ParamLayout l = ParamLayout::of(c);
  // Generator layer 2 reduces to its bias: the kernel is gen2_b.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1, 1);
  for (std::size_t i = 0; i < l.gen2_b.size; ++i) p[l.gen2_b.offset + i] = u(rng);
  const std::vector<float> x = {0.2f, 0.7f, 0.4f};
  const auto y = adaptive_conv_block(x, p, c);
  ASSERT_EQ(y.size(), 3u);
  for (int f = 0; f < c.features; ++f) {
    double s = 0;
    for (int ch = 0; ch < 3; ++ch) s += p[l.gen2_b.offset + ((1 * 3 + 1) * 3 + ch) * c.features + f] * x[ch];
    EXPECT_NEAR(y[f], std::max(0.0, s), 1e-6);
  }
}

TEST(AdaptiveConv, MatchesBruteForceConvolution) {
  const ModelConfig c = fixtures::tiny_config();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ParameterVector p = random_params(c, seed);
    const Frame tile = fixtures::random_frame(c.patch, c.patch, seed + 10);
    const auto y = adaptive_conv_block(tile_of(tile), p, c);
    const auto oracle = naive_adaptive(std::vector<double>(tile.data().begin(), tile.data().end()), p, c);
    ASSERT_EQ(y.size(), oracle.size());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], oracle[i], 1e-5);
  }
}

TEST(PixelShuffle, ChannelOrderConvention) {
  FeatureMap in(1, 1, 12);
  for (int i = 0; i < 12; ++i) in.data[i] = static_cast<float>(i);
  const FeatureMap out = pixel_shuffle(in, 2);
  ASSERT_EQ(out.height, 2);
  ASSERT_EQ(out.width, 2);
  ASSERT_EQ(out.channels, 3);
  const float expect[2][2][3] = {{{0, 4, 8}, {1, 5, 9}}, {{2, 6, 10}, {3, 7, 11}}};
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(out.at(y, x, ch), expect[y][x][ch]);
}

TEST(PixelShuffle, WrongChannelCountRejected) {
  EXPECT_THROW(pixel_shuffle(FeatureMap(2, 2, 11), 2), InvalidArgument);
}

TEST(PixelShuffle, SpaceToDepthInverts) {
  FeatureMap in(3, 4, 27);
  std::mt19937_64 rng(1);
  for (float& v : in.data) v = static_cast<float>(rng() % 1000);
  const FeatureMap back = space_to_depth(pixel_shuffle(in, 3), 3);
  EXPECT_EQ(back.data, in.data);
}

TEST(Forward, OutputShapeIsScaled) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p = init_parameters(c, 1);
  const Frame out = forward(fixtures::random_frame(20, 20, 1), p, c);
  EXPECT_EQ(out.height(), 80);
  EXPECT_EQ(out.width(), 80);
  const Frame odd = forward(fixtures::random_frame(7, 9, 1), p, c);
  EXPECT_EQ(odd.height(), 28);
  EXPECT_EQ(odd.width(), 36);
}

TEST(Forward, ZeroParamsGiveZeroFrame) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p(param_count(c), 0.0f);
  for (float v : forward(fixtures::random_frame(8, 8, 1), p, c).data()) EXPECT_EQ(v, 0.0f);
}

TEST(Forward, OutputInUnitInterval) {
  const ModelConfig c = fixtures::tiny_config();
  ParameterVector p = random_params(c, 4, 2.0f);
  for (float v : forward(fixtures::random_frame(9, 6, 1), p, c).data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Forward, MatchesStraightLineOracle) {
  const ModelConfig c{4, 4, 2, 8, 8};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ParameterVector p = random_params(c, seed);
    const Frame lr = fixtures::random_frame(8, 8, seed + 20);
    const Frame got = forward(lr, p, c);
    const Frame want = naive_forward(lr, p, c);
    ASSERT_TRUE(got.same_shape(want));
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-5);
  }
}

TEST(Forward, NonDivisibleInputMatchesOracle) {
  const ModelConfig c{4, 4, 2, 8, 8};
  const ParameterVector p = random_params(c, 12);
  const Frame lr = fixtures::random_frame(6, 9, 30);
  const Frame got = forward(lr, p, c);
  const Frame want = naive_forward(lr, p, c);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-5);
}

TEST(Forward, FloatAndDoublePathsAgree) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p = random_params(c, 3);
  const std::vector<double> pd(p.begin(), p.end());
  const Frame lr = fixtures::random_frame(8, 8, 2);
  const auto a = forward_raw<float>(lr, p, c);
  const auto b = forward_raw<double>(lr, pd, c);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-4);
}

TEST(Forward, ParameterLengthMismatchRejected) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p(10, 0.0f);
  EXPECT_THROW(forward(fixtures::random_frame(8, 8, 1), p, c), InvalidArgument);
}

TEST(Loss, HrMismatchRejected) {
  const ModelConfig c = fixtures::tiny_config();
  const ParameterVector p = init_parameters(c, 1);
  EXPECT_THROW(frame_loss<float>(fixtures::random_frame(8, 8, 1), Frame(30, 32), p, c), InvalidArgument);
}
