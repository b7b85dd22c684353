#include <gtest/gtest.h>

#include <cmath>

#include "srvc/error.hpp"
#include "srvc/metrics.hpp"
#include "test_util.hpp"

using namespace srvc;

namespace {

double keys_kernel(double x) {
  x = std::fabs(x);
  if (x < 1) return 1.5 * x * x * x - 2.5 * x * x + 1;
  if (x < 2) return -0.5 * x * x * x + 2.5 * x * x - 4 * x + 2;
  return 0;
}

// Direct 2-D evaluation of the resampling sum at each target pixel.
Frame brute_force_bicubic(const Frame& src, int oh, int ow) {
  Frame out(oh, ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      const double sy = (y + 0.5) * src.height() / oh - 0.5;
      const double sx = (x + 0.5) * src.width() / ow - 0.5;
      for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int j = static_cast<int>(std::floor(sy)) - 1; j <= static_cast<int>(std::floor(sy)) + 2; ++j)
          for (int i = static_cast<int>(std::floor(sx)) - 1; i <= static_cast<int>(std::floor(sx)) + 2; ++i) {
            const int cj = std::clamp(j, 0, src.height() - 1), ci = std::clamp(i, 0, src.width() - 1);
            s += keys_kernel(sy - j) * keys_kernel(sx - i) * src.at(cj, ci, c);
          }
        out.at(y, x, c) = static_cast<float>(std::clamp(s, 0.0, 1.0));
      }
    }
  return out;
}

VideoSequence single(Frame f) {
  VideoSequence v;
  v.frames.push_back(std::move(f));
  return v;
}

}  // namespace

TEST(Psnr, IdenticalIsCapped) {
  const VideoSequence v = fixtures::moving_texture(2, 8, 8, 1.0);
  const PsnrResult r = psnr(v, v);
  EXPECT_EQ(r.aggregate_db, 99.0);
  EXPECT_EQ(r.per_frame_db, (std::vector<double>{99.0, 99.0}));
}

TEST(Psnr, UniformErrorOfSixteenLevels) {
  Frame a(8, 8), b(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) {
        const int v = (y * 8 + x * 3 + c * 5) % 200;
        a.at(y, x, c) = from_u8(static_cast<std::uint8_t>(v));
        b.at(y, x, c) = from_u8(static_cast<std::uint8_t>(v + 16));
      }
  const double got = psnr(single(a), single(b)).aggregate_db;
  EXPECT_NEAR(got, 10 * std::log10(255.0 * 255.0 / 256.0), 1e-3);
  EXPECT_NEAR(got, 24.05, 1e-2);
}

TEST(Psnr, AggregatePoolsMse) {
  VideoSequence ref, test;
  ref.frames = {Frame(4, 4, 0.5f), Frame(4, 4, 0.5f)};
  test.frames = {Frame(4, 4, 0.6f), Frame(4, 4, 0.8f)};
  const PsnrResult r = psnr(ref, test);
  const double m1 = mse(ref.frames[0], test.frames[0]), m2 = mse(ref.frames[1], test.frames[1]);
  EXPECT_NEAR(r.aggregate_db, 10 * std::log10(2.0 / (m1 + m2)), 1e-9);
  EXPECT_GT(std::abs(r.aggregate_db - (r.per_frame_db[0] + r.per_frame_db[1]) / 2), 0.5);
}

TEST(Psnr, DimensionMismatchRejected) {
  EXPECT_THROW(psnr(single(Frame(4, 4)), single(Frame(4, 5))), InvalidArgument);
  VideoSequence two;
  two.frames = {Frame(4, 4), Frame(4, 4)};
  EXPECT_THROW(psnr(single(Frame(4, 4)), two), InvalidArgument);
}

TEST(Ssim, IdenticalIsOne) {
  const Frame f = fixtures::random_frame(16, 16, 2);
  EXPECT_NEAR(ssim(f, f), 1.0, 1e-12);
}

TEST(Ssim, ConstantImagesClosedForm) {
  const double c1 = 1e-4;
  const double expect = (2 * 0.5 * 0.6 + c1) / (0.25 + 0.36 + c1);
  EXPECT_NEAR(ssim(Frame(16, 16, 0.5f), Frame(16, 16, 0.6f)), expect, 1e-4);
  EXPECT_NEAR(expect, 0.9836, 1e-4);
}

TEST(Ssim, BoundedForRandomPairs) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double v = ssim(fixtures::random_frame(12, 14, s), fixtures::random_frame(12, 14, s + 100));
    EXPECT_LE(v, 1.0);
    EXPECT_GT(v, -1.0);
  }
}

TEST(Ssim, SmallFrameRejected) {
  EXPECT_THROW(ssim(Frame(10, 20), Frame(10, 20)), InvalidArgument);
}

TEST(Quality, ReportLengths) {
  const VideoSequence v = fixtures::moving_texture(3, 12, 12, 1.0);
  const QualityReport q = evaluate_quality(v, v);
  EXPECT_EQ(q.per_frame_psnr.size(), 3u);
  EXPECT_EQ(q.per_frame_ssim.size(), 3u);
  EXPECT_NEAR(q.mean_ssim, 1.0, 1e-12);
}

TEST(Bicubic, KernelValues) {
  EXPECT_DOUBLE_EQ(cubic_weight(0), 1.0);
  EXPECT_DOUBLE_EQ(cubic_weight(1), 0.0);
  EXPECT_DOUBLE_EQ(cubic_weight(2), 0.0);
  EXPECT_DOUBLE_EQ(cubic_weight(0.5), 0.5625);
  EXPECT_DOUBLE_EQ(cubic_weight(1.5), -0.0625);
  for (double t = 0; t < 1; t += 0.05) {
    EXPECT_NEAR(cubic_weight(t + 1) + cubic_weight(t) + cubic_weight(1 - t) + cubic_weight(2 - t), 1.0, 1e-12);
  }
}

TEST(Bicubic, ConstantStaysConstant) {
  for (float v : bicubic_upsample(Frame(5, 7, 0.3f), 20, 21).data()) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(Bicubic, LinearRampInteriorExact) {
  const int n = 12;
  Frame f(4, n);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c) f.at(y, x, c) = static_cast<float>(x) / (2 * n);
  const Frame up = bicubic_upsample(f, 8, 2 * n);
  for (int y = 0; y < 8; ++y)
    for (int x = 2 * 2; x < 2 * n - 2 * 2; ++x) {
      const double s = (x + 0.5) / 2 - 0.5;
      EXPECT_NEAR(up.at(y, x, 1), s / (2 * n), 1e-6);
    }
}

TEST(Bicubic, MatchesBruteForceOracle) {
  Frame tiny(2, 2);
  const float v[2][2][3] = {{{0.1f, 0.9f, 0.4f}, {0.7f, 0.2f, 0.5f}}, {{0.3f, 0.6f, 0.8f}, {0.5f, 0.5f, 0.1f}}};
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int c = 0; c < 3; ++c) tiny.at(y, x, c) = v[y][x][c];
  const Frame got = bicubic_upsample(tiny, 4, 4);
  const Frame want = brute_force_bicubic(tiny, 4, 4);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-6);

  const Frame r = fixtures::random_frame(7, 5, 4);
  const Frame g2 = bicubic_resize(r, 17, 13);
  const Frame w2 = brute_force_bicubic(r, 17, 13);
  for (std::size_t i = 0; i < g2.size(); ++i) EXPECT_NEAR(g2.data()[i], w2.data()[i], 1e-6);
}

TEST(Bicubic, OutputClamped) {
  Frame f(4, 4, 0.0f);
  f.at(1, 1, 0) = 1.0f;
  for (float v : bicubic_upsample(f, 16, 16).data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_THROW(bicubic_upsample(f, 3, 8), InvalidArgument);
}
