#include "srvc/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "srvc/error.hpp"
#include "srvc/metrics.hpp"

namespace srvc {

void SweepGrid::validate() const {
  if (quality_settings.empty() || etas.empty() || taus.empty() || feature_values.empty()) {
    throw InvalidArgument("every sweep axis needs at least one value");
  }
}

SweepCell sweep_cell(const SweepGrid& grid, std::size_t index) {
  SweepCell c;
  c.features = grid.feature_values[index % grid.feature_values.size()];
  index /= grid.feature_values.size();
  c.tau = grid.taus[index % grid.taus.size()];
  index /= grid.taus.size();
  c.eta = grid.etas[index % grid.etas.size()];
  index /= grid.etas.size();
  c.quality = grid.quality_settings[index];
  return c;
}

namespace {

RDPoint blank_point(const char* method, const SweepCell& cell) {
  RDPoint p;
  p.method = method;
  p.eta = cell.eta;
  p.tau = cell.tau;
  p.quality = cell.quality;
  p.features = cell.features;
  return p;
}

void fill_quality(RDPoint& p, const VideoSequence& reference, const VideoSequence& decoded) {
  const QualityReport q = evaluate_quality(reference, decoded);
  p.psnr_db = q.aggregate_psnr;
  p.ssim = q.mean_ssim;
  p.per_frame_psnr = q.per_frame_psnr;
  p.per_frame_ssim = q.per_frame_ssim;
}

void fill_from_encode(RDPoint& p, const VideoSequence& video, const EncodeResult& r, const EncodeJob& job) {
  const EncodedVideo& e = r.encoded;
  p.content_bits = e.content_bits();
  p.model_bits = e.model_bits();
  p.bpp = bits_per_pixel(p.content_bits, p.model_bits, e.manifest.frames, e.manifest.hr_height,
                         e.manifest.hr_width);
  fill_quality(p, video, decode(e, 0, static_cast<std::size_t>(-1), job.external).video);
}

std::vector<RDPoint> run_cell(const VideoSequence& video, const SweepCell& cell, const SweepOptions& options) {
  EncodeJob job = options.base;
  job.source = video;
  job.quality = cell.quality;
  job.training.eta = cell.eta;
  job.tau = cell.tau;
  job.model.features = cell.features;
  job.checkpoint.clear();

  std::vector<RDPoint> out;
  std::optional<ParameterVector> initial;

  RDPoint srvc = blank_point("srvc", cell);
  try {
    const EncodeResult r = encode(job);
    initial = r.initial_trained;
    fill_from_encode(srvc, video, r, job);
  } catch (const std::exception& e) {
    srvc.error = e.what();
  }
  out.push_back(std::move(srvc));

  RDPoint oneshot = blank_point("oneshot", cell);
  try {
    EncodeJob one = job;
    one.tau = kOneShot;
    one.initial_model = initial;
    fill_from_encode(oneshot, video, encode(one), one);
  } catch (const std::exception& e) {
    oneshot.error = e.what();
  }
  out.push_back(std::move(oneshot));

  RDPoint bicubic = blank_point("bicubic", cell);
  try {
    const VideoSequence lr = area_downsample(video, job.model.scale);
    const ContentStream content = content_encode(lr, job.codec_id, job.quality, job.external);
    const VideoSequence up = bicubic_upsample(content_decode(content, job.external), video.height(), video.width());
    bicubic.content_bits = 8ull * content.byte_count();
    bicubic.bpp = bits_per_pixel(bicubic.content_bits, 0, video.frame_count(), video.height(), video.width());
    fill_quality(bicubic, video, up);
  } catch (const std::exception& e) {
    bicubic.error = e.what();
  }
  out.push_back(std::move(bicubic));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out + "\"";
}

std::string tau_ms_text(double tau) {
  if (std::isinf(tau)) return "inf";
  return std::to_string(static_cast<long long>(std::llround(tau * 1000.0)));
}

}  // namespace

std::vector<RDPoint> run_sweep(const VideoSequence& video, const SweepGrid& grid, const SweepOptions& options) {
  grid.validate();
  video.validate();
  if (video.frames.empty()) throw InvalidArgument("sweep needs a non-empty video");

  const std::size_t cells = grid.cells();
  std::vector<std::vector<RDPoint>> results(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells; i = next++) {
      results[i] = run_cell(video, sweep_cell(grid, i), options);
    }
  };
  const int workers = std::clamp(options.workers, 1, static_cast<int>(cells));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RDPoint> points;
  for (auto& cell : results) {
    for (auto& p : cell) points.push_back(std::move(p));
  }
  if (!options.csv_path.empty()) write_sweep_csv(options.csv_path, points);
  if (!options.cdf_path.empty()) write_cdf_csv(options.cdf_path, points);
  return points;
}

std::string sweep_csv_header() {
  return "method,eta,tau_ms,quality,F,bpp,psnr_db,ssim,content_bits,model_bits,error";
}

std::string sweep_csv_row(const RDPoint& p) {
  std::ostringstream os;
  os.precision(10);
  os << p.method << ',' << p.eta << ',' << tau_ms_text(p.tau) << ',' << p.quality << ',' << p.features << ',';
  if (p.error.empty()) {
    os << p.bpp << ',' << p.psnr_db << ',' << p.ssim << ',' << p.content_bits << ',' << p.model_bits << ',';
  } else {
    os << ",,,,,";
  }
  os << csv_escape(p.error);
  return os.str();
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<RDPoint>& points) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << sweep_csv_header() << '\n';
  for (const auto& p : points) out << sweep_csv_row(p) << '\n';
}

void write_cdf_csv(const std::filesystem::path& path, const std::vector<RDPoint>& points) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.precision(10);
  out << "method,eta,tau_ms,quality,F,frame_index,psnr_db,ssim\n";
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.per_frame_psnr.size(); ++i) {
      out << p.method << ',' << p.eta << ',' << tau_ms_text(p.tau) << ',' << p.quality << ',' << p.features << ','
          << i << ',' << p.per_frame_psnr[i] << ',' << p.per_frame_ssim[i] << '\n';
    }
  }
}

double benchmark_inference(const ModelConfig& config, int height, int width, int repetitions, std::uint64_t seed) {
  if (repetitions < 10) throw InvalidArgument("benchmark needs at least 10 repetitions");
  std::mt19937_64 rng(seed);
  Frame frame(height, width);
  for (float& v : frame.data()) v = static_cast<float>(rng() >> 40) / static_cast<float>(1u << 24);
  const ParameterVector params = init_parameters(config, seed);

  volatile float sink = forward(frame, params, config).data()[0];
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(repetitions));
  for (int i = 0; i < repetitions; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const Frame out = forward(frame, params, config);
    const auto stop = std::chrono::steady_clock::now();
    sink = out.data()[0];
    times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  (void)sink;
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

}  // namespace srvc
