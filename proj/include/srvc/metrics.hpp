#pragma once

#include <vector>

#include "srvc/frame.hpp"

namespace srvc {

// Reported in place of +inf when the MSE is exactly zero.
inline constexpr double kPsnrCap = 99.0;

// Mean squared error over all pixels and RGB channels, unit-interval scale.
double mse(const Frame& reference, const Frame& test);
double psnr_from_mse(double mse);

struct PsnrResult {
  double aggregate_db = 0.0;  // from the MSE pooled over every frame
  std::vector<double> per_frame_db;
};

PsnrResult psnr(const VideoSequence& reference, const VideoSequence& test);

// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range 1, valid-window statistics, averaged
// over RGB channels.
double ssim(const Frame& reference, const Frame& test);

struct QualityReport {
  double aggregate_psnr = 0.0;
  double mean_ssim = 0.0;
  std::vector<double> per_frame_psnr;
  std::vector<double> per_frame_ssim;
};

QualityReport evaluate_quality(const VideoSequence& reference, const VideoSequence& test);

// Catmull-Rom (a = -0.5) cubic kernel.
double cubic_weight(double x) noexcept;

// Bicubic resampling with half-pixel-centre alignment and edge clamping;
// output clamped to [0, 1]. Works in both directions.
Frame bicubic_resize(const Frame& frame, int height, int width);
// As bicubic_resize; target must be at least the source size.
Frame bicubic_upsample(const Frame& frame, int height, int width);
VideoSequence bicubic_upsample(const VideoSequence& video, int height, int width);

}  // namespace srvc
