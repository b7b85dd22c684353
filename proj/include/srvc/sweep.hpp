#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "srvc/pipeline.hpp"

namespace srvc {

struct SweepGrid {
  std::vector<int> quality_settings;
  std::vector<double> etas;
  std::vector<double> taus;
  std::vector<int> feature_values;

  void validate() const;
  std::size_t cells() const noexcept {
    return quality_settings.size() * etas.size() * taus.size() * feature_values.size();
  }
};

// Cell c enumerates (quality, eta, tau, F) with F varying fastest.
struct SweepCell {
  int quality = 0;
  double eta = 0.0;
  double tau = 0.0;
  int features = 0;
};
SweepCell sweep_cell(const SweepGrid& grid, std::size_t index);

struct RDPoint {
  std::string method;  // "srvc", "oneshot" or "bicubic"
  double eta = 0.0;
  double tau = 0.0;
  int quality = 0;
  int features = 0;
  double bpp = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::uint64_t content_bits = 0;
  std::uint64_t model_bits = 0;
  std::string error;
  std::vector<double> per_frame_psnr;
  std::vector<double> per_frame_ssim;
};

struct SweepOptions {
  // Template for every cell; quality, eta, tau and F are overridden per cell.
  EncodeJob base;
  int workers = 1;
  std::filesystem::path csv_path;  // optional
  std::filesystem::path cdf_path;  // optional per-frame CSV
};

inline constexpr const char* kMethods[] = {"srvc", "oneshot", "bicubic"};

// One RDPoint per cell per method, in grid order x method order. Failures
// are captured in RDPoint::error.
std::vector<RDPoint> run_sweep(const VideoSequence& video, const SweepGrid& grid, const SweepOptions& options);

std::string sweep_csv_header();
std::string sweep_csv_row(const RDPoint& point);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<RDPoint>& points);
// Columns: method, eta, tau_ms, quality, F, frame_index, psnr_db, ssim.
void write_cdf_csv(const std::filesystem::path& path, const std::vector<RDPoint>& points);

// Median wall-clock milliseconds of `repetitions` forward calls on a random
// frame (one untimed warm-up call first).
double benchmark_inference(const ModelConfig& config, int height, int width, int repetitions,
                           std::uint64_t seed = 7);

}  // namespace srvc
