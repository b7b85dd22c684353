#include "srvc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "srvc/error.hpp"

namespace srvc {

double mse(const Frame& reference, const Frame& test) {
  if (!reference.same_shape(test)) throw InvalidArgument("frames differ in dimensions");
  if (reference.empty()) throw InvalidArgument("empty frame");
  double sum = 0.0;
  const auto a = reference.data();
  const auto b = test.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

PsnrResult psnr(const VideoSequence& reference, const VideoSequence& test) {
  if (reference.frame_count() != test.frame_count()) throw InvalidArgument("videos differ in frame count");
  if (reference.frames.empty()) throw InvalidArgument("empty video");
  PsnrResult r;
  double pooled = 0.0;
  for (std::size_t i = 0; i < reference.frames.size(); ++i) {
    const double m = mse(reference.frames[i], test.frames[i]);
    pooled += m;
    r.per_frame_db.push_back(psnr_from_mse(m));
  }
  // Frames share dimensions, so the pooled MSE is the mean of frame MSEs.
  r.aggregate_db = psnr_from_mse(pooled / static_cast<double>(reference.frames.size()));
  return r;
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    w[i] = std::exp(-(x * x) / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::array<double, kWindow>& g) {
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += g[i] * plane[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const Frame& reference, const Frame& test) {
  if (!reference.same_shape(test)) throw InvalidArgument("frames differ in dimensions");
  if (reference.height() < kWindow || reference.width() < kWindow) {
    throw InvalidArgument("frame smaller than the 11x11 SSIM window");
  }
  const int h = reference.height(), w = reference.width();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const auto g = gaussian_window();
  double total = 0.0;
  for (int c = 0; c < kChannels; ++c) {
    std::vector<double> a(static_cast<std::size_t>(h) * w), b(a.size()), aa(a.size()), bb(a.size()), ab(a.size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        a[i] = reference.at(y, x, c);
        b[i] = test.at(y, x, c);
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
      }
    }
    const auto mu_a = filter_valid(a, h, w, g);
    const auto mu_b = filter_valid(b, h, w, g);
    const auto e_aa = filter_valid(aa, h, w, g);
    const auto e_bb = filter_valid(bb, h, w, g);
    const auto e_ab = filter_valid(ab, h, w, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / kChannels;
}

QualityReport evaluate_quality(const VideoSequence& reference, const VideoSequence& test) {
  const PsnrResult p = psnr(reference, test);
  QualityReport r;
  r.aggregate_psnr = p.aggregate_db;
  r.per_frame_psnr = p.per_frame_db;
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.frames.size(); ++i) {
    r.per_frame_ssim.push_back(ssim(reference.frames[i], test.frames[i]));
    sum += r.per_frame_ssim.back();
  }
  r.mean_ssim = sum / static_cast<double>(reference.frames.size());
  return r;
}

double cubic_weight(double x) noexcept {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> axis_taps(int src, int dst) {
  std::vector<Taps> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    const double s = (o + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(s));
    const double t = s - base;
    for (int j = 0; j < 4; ++j) {
      taps[o].index[j] = std::clamp(base - 1 + j, 0, src - 1);
      taps[o].weight[j] = cubic_weight(t - (j - 1));
    }
  }
  return taps;
}

}  // namespace

Frame bicubic_resize(const Frame& frame, int height, int width) {
  if (frame.empty()) throw InvalidArgument("resize of an empty frame");
  if (height < 1 || width < 1) throw InvalidArgument("resize target must be positive");
  const auto ty = axis_taps(frame.height(), height);
  const auto tx = axis_taps(frame.width(), width);

  // horizontal pass into (src_h, width), then vertical
  std::vector<double> tmp(static_cast<std::size_t>(frame.height()) * width * kChannels);
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += tx[x].weight[j] * frame.at(y, tx[x].index[j], c);
        tmp[(static_cast<std::size_t>(y) * width + x) * kChannels + c] = s;
      }
    }
  }
  Frame out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) {
          s += ty[y].weight[j] * tmp[(static_cast<std::size_t>(ty[y].index[j]) * width + x) * kChannels + c];
        }
        out.at(y, x, c) = static_cast<float>(std::clamp(s, 0.0, 1.0));
      }
    }
  }
  return out;
}

Frame bicubic_upsample(const Frame& frame, int height, int width) {
  if (height < frame.height() || width < frame.width()) {
    throw InvalidArgument("bicubic_upsample target smaller than source");
  }
  return bicubic_resize(frame, height, width);
}

VideoSequence bicubic_upsample(const VideoSequence& video, int height, int width) {
  VideoSequence out;
  out.fps = video.fps;
  for (const Frame& f : video.frames) out.frames.push_back(bicubic_upsample(f, height, width));
  return out;
}

}  // namespace srvc
