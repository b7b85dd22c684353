#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "srvc/error.hpp"
#include "srvc/metrics.hpp"
#include "srvc/model_stream.hpp"
#include "srvc/pipeline.hpp"
#include "srvc/sweep.hpp"
#include "srvc/video_io.hpp"

namespace fs = std::filesystem;
using namespace srvc;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kCodec = 3, kTraining = 4, kCorrupt = 5 };

struct Options {
  std::string input, output, reference, checkpoint, csv, cdf;
  double fps = 30.0;
  double eta = 0.01;
  std::string tau = "5";
  ModelConfig model;
  std::string codec = "lossless";
  int quality = 0;
  std::uint64_t seed = 1;
  int workers = 1;
  int epochs = 16;
  int initial_epochs = 32;
  double lr = 1e-4;
  double initial_lr = 1e-4;
  bool no_crop = false;
  int height = 0, width = 0;
  std::string frames;
  std::vector<int> qualities;
  std::vector<double> etas;
  std::vector<std::string> taus;
  std::vector<int> features;
  int repetitions = 20;
  int verbose = 0;
};

double parse_tau(const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "oneshot") return kOneShot;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(v > 0.0)) throw InvalidArgument("--tau must be a positive number of seconds or 'inf'");
  return v;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw InvalidArgument("--frames expects a:b");
  try {
    const std::size_t a = colon ? std::stoull(s.substr(0, colon)) : 0;
    const std::size_t b = colon + 1 < s.size() ? std::stoull(s.substr(colon + 1)) : static_cast<std::size_t>(-1);
    if (b <= a) throw InvalidArgument("--frames range is empty");
    return {a, b};
  } catch (const std::logic_error&) {
    throw InvalidArgument("--frames expects a:b with non-negative integers");
  }
}

void add_model_flags(CLI::App* app, Options& o) {
  app->add_option("-F,--feature-channels", o.model.features, "adaptive conv output channels")->check(CLI::PositiveNumber);
  app->add_option("-P,--patch", o.model.patch, "patch side in LR pixels")->check(CLI::PositiveNumber);
  app->add_option("-k,--scale", o.model.scale, "integer upscale factor")->check(CLI::PositiveNumber);
  app->add_option("--gen-hidden", o.model.gen_hidden, "kernel generator hidden width")->check(CLI::PositiveNumber);
  app->add_option("--reg-hidden", o.model.reg_hidden, "regular block hidden width")->check(CLI::PositiveNumber);
}

void add_job_flags(CLI::App* app, Options& o) {
  add_model_flags(app, o);
  app->add_option("--fps", o.fps, "frame rate for image-sequence input")->check(CLI::PositiveNumber);
  app->add_option("--codec", o.codec, "content codec: lossless, quant or external")
      ->check(CLI::IsMember({"lossless", "quant", "external"}));
  app->add_option("--quality", o.quality, "codec quality (quant: levels, external: crf)");
  app->add_option("--seed", o.seed, "initialisation and training seed");
  app->add_option("--epochs", o.epochs, "training epochs per segment")->check(CLI::NonNegativeNumber);
  app->add_option("--initial-epochs", o.initial_epochs, "dense epochs for the initial model")->check(CLI::NonNegativeNumber);
  app->add_option("--lr", o.lr, "Adam learning rate for segment updates")->check(CLI::PositiveNumber);
  app->add_option("--initial-lr", o.initial_lr, "Adam learning rate for the initial model")->check(CLI::PositiveNumber);
  app->add_flag("--no-crop", o.no_crop, "train on full frames instead of half-size random crops");
  app->add_option("--height", o.height, "output height (default: input height)")->check(CLI::NonNegativeNumber);
  app->add_option("--width", o.width, "output width (default: input width)")->check(CLI::NonNegativeNumber);
}

EncodeJob make_job(const Options& o) {
  EncodeJob job;
  job.model = o.model;
  job.tau = parse_tau(o.tau);
  job.training.eta = o.eta;
  job.training.lr = o.lr;
  job.training.epochs_per_segment = o.epochs;
  job.training.crop = !o.no_crop;
  job.training.seed = o.seed;
  job.initial.epochs = o.initial_epochs;
  job.initial.lr = o.initial_lr;
  job.initial.crop = !o.no_crop;
  job.init_seed = o.seed;
  job.codec_id = o.codec;
  job.quality = o.quality;
  job.target_height = o.height;
  job.target_width = o.width;
  job.checkpoint = o.checkpoint;
  return job;
}

void info(const Options& o, const std::string& line) {
  if (o.verbose > 0) std::cerr << line << '\n';
}

int cmd_encode(const Options& o) {
  EncodeJob job = make_job(o);
  job.source = load_video(o.input, o.fps);
  info(o, "encoding " + std::to_string(job.source.frame_count()) + " frames of " + std::to_string(job.source.width()) +
              "x" + std::to_string(job.source.height()));
  const EncodeResult r = encode(job);
  save_encoded(o.output, r.encoded);
  const Manifest& m = r.encoded.manifest;
  const double bpp = bits_per_pixel(r.encoded.content_bits(), r.encoded.model_bits(), m.frames, m.hr_height, m.hr_width);
  std::printf("frames          %zu (%dx%d, %.6g fps)\n", m.frames, m.hr_width, m.hr_height, m.fps);
  std::printf("segments        %zu\n", m.segments.size());
  std::printf("update records  %zu\n", r.reports.size());
  std::printf("content bytes   %zu\n", r.encoded.content.byte_count());
  std::printf("model bytes     %zu\n", r.encoded.model.size());
  std::printf("bpp             %.6f\n", bpp);
  if (o.verbose > 0) {
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
      const auto& rep = r.reports[i];
      std::printf("segment %zu: loss %.6g -> %.6g, %zu params\n", i, rep.loss_before, rep.loss_after, rep.selected_count);
    }
  }
  std::printf("wrote %s\n", o.output.c_str());
  return kOk;
}

int cmd_decode(const Options& o) {
  const EncodedVideo e = load_encoded(o.input);
  std::size_t first = 0, last = static_cast<std::size_t>(-1);
  if (!o.frames.empty()) std::tie(first, last) = parse_range(o.frames);
  if (first >= e.manifest.frames) throw InvalidArgument("--frames starts beyond the last frame");
  const DecodeResult d = decode(e, first, last);
  write_image_sequence(o.output, d.video, first);
  std::printf("decoded %zu frames (%dx%d) to %s\n", d.video.frame_count(), d.video.width(), d.video.height(),
              o.output.c_str());
  return kOk;
}

int cmd_eval(const Options& o) {
  const VideoSequence ref = load_video(o.reference, o.fps);
  const VideoSequence test = load_video(o.input, o.fps);
  const QualityReport q = evaluate_quality(ref, test);
  std::printf("frames          %zu\n", q.per_frame_psnr.size());
  std::printf("aggregate PSNR  %.4f dB\n", q.aggregate_psnr);
  std::printf("mean SSIM       %.6f\n", q.mean_ssim);
  if (!o.csv.empty()) {
    std::ofstream out(o.csv);
    if (!out) throw InvalidArgument("cannot write " + o.csv);
    out.precision(10);
    out << "frame_index,psnr_db,ssim\n";
    for (std::size_t i = 0; i < q.per_frame_psnr.size(); ++i) {
      out << i << ',' << q.per_frame_psnr[i] << ',' << q.per_frame_ssim[i] << '\n';
    }
    std::printf("wrote %s\n", o.csv.c_str());
  }
  return kOk;
}

int cmd_sweep(const Options& o) {
  SweepGrid grid;
  grid.quality_settings = o.qualities.empty() ? std::vector<int>{o.quality} : o.qualities;
  grid.etas = o.etas.empty() ? std::vector<double>{o.eta} : o.etas;
  if (o.taus.empty()) grid.taus = {parse_tau(o.tau)};
  for (const auto& t : o.taus) grid.taus.push_back(parse_tau(t));
  grid.feature_values = o.features.empty() ? std::vector<int>{o.model.features} : o.features;
  for (double e : grid.etas) {
    if (!(e > 0.0 && e <= 1.0)) throw InvalidArgument("--etas values must lie in (0, 1]");
  }

  SweepOptions opts;
  opts.base = make_job(o);
  opts.workers = o.workers;
  opts.csv_path = o.output;
  opts.cdf_path = o.cdf;
  const VideoSequence video = load_video(o.input, o.fps);
  info(o, "sweeping " + std::to_string(grid.cells()) + " cells with " + std::to_string(o.workers) + " workers");
  const auto points = run_sweep(video, grid, opts);
  std::size_t failed = 0;
  for (const auto& p : points) {
    if (!p.error.empty()) {
      ++failed;
      std::printf("%-8s eta=%g tau=%g q=%d F=%d failed: %s\n", p.method.c_str(), p.eta, p.tau, p.quality, p.features,
                  p.error.c_str());
    } else {
      std::printf("%-8s eta=%g tau=%g q=%d F=%d  bpp %.5f  PSNR %.3f dB  SSIM %.4f\n", p.method.c_str(), p.eta, p.tau,
                  p.quality, p.features, p.bpp, p.psnr_db, p.ssim);
    }
  }
  std::printf("%zu rows (%zu failed), wrote %s\n", points.size(), failed, o.output.c_str());
  return kOk;
}

int cmd_inspect(const Options& o) {
  fs::path path = o.input;
  if (fs::is_directory(path)) path /= kModelFile;
  const ModelStreamFile f = read_stream_file(path);
  const StreamHeader& h = f.header;
  std::printf("version         %u\n", static_cast<unsigned>(h.version));
  std::printf("parameters      %u\n", h.param_count);
  std::printf("config          F=%d P=%d k=%d C_g=%d C_r=%d\n", h.config.features, h.config.patch, h.config.scale,
              h.config.gen_hidden, h.config.reg_hidden);
  if (h.tau_ms == kOneShotTauMs) std::printf("tau             inf (one-shot)\n");
  else std::printf("tau             %u ms\n", h.tau_ms);
  std::printf("init seed       %llu\n", static_cast<unsigned long long>(h.init_seed));
  std::printf("index bits      %u\n", static_cast<unsigned>(h.index_bits));
  std::printf("updates         %zu\n", f.updates.size());
  std::printf("%-8s %-8s %-10s %-10s %s\n", "record", "segment", "count", "bytes", "max|delta|");
  for (std::size_t i = 0; i < f.updates.size(); ++i) {
    const SparseUpdate& u = f.updates[i];
    float peak = 0;
    for (auto d : u.deltas) peak = std::max(peak, std::abs(widen_model(std::span(&d, 1))[0]));
    std::printf("%-8zu %-8u %-10zu %-10zu %.6g\n", i + 1, u.segment_index, u.size(), record_bytes(u.size(), h.index_bits),
                peak);
  }
  return kOk;
}

int cmd_bench(const Options& o) {
  const double ms = benchmark_inference(o.model, o.height > 0 ? o.height : 64, o.width > 0 ? o.width : 64, o.repetitions,
                                        o.seed);
  std::printf("median forward time %.3f ms (%d repetitions)\n", ms, o.repetitions);
  return kOk;
}

struct Cli {
  CLI::App app{"Super-resolution video codec: content stream plus sparse model-update stream", "srvc"};
  Options o;
  std::string config;
  std::map<std::string, int (*)(const Options&)> handlers;

  Cli() {
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("-v,--verbose", o.verbose, "progress on stderr");

    auto* enc = app.add_subcommand("encode", "encode a video into content, model stream and manifest");
    enc->add_option("-i,--input", o.input, "raw video (with .hdr) or PPM directory")->required();
    enc->add_option("-o,--output", o.output, "output directory")->required();
    enc->add_option("--eta", o.eta, "fraction of parameters updated per segment");
    enc->add_option("--tau", o.tau, "update interval in seconds, or inf for one-shot");
    enc->add_option("--checkpoint", o.checkpoint, "checkpoint file for resumable encodes");
    add_job_flags(enc, o);
    handlers["encode"] = cmd_encode;

    auto* dec = app.add_subcommand("decode", "decode an encoded directory to PPM frames");
    dec->add_option("-i,--input", o.input, "encoded directory")->required();
    dec->add_option("-o,--output", o.output, "output frame directory")->required();
    dec->add_option("--frames", o.frames, "frame range a:b (half-open)");
    handlers["decode"] = cmd_decode;

    auto* ev = app.add_subcommand("eval", "PSNR/SSIM of a video against a reference");
    ev->add_option("-r,--reference", o.reference, "reference video")->required();
    ev->add_option("-i,--input", o.input, "test video")->required();
    ev->add_option("--fps", o.fps, "frame rate for image-sequence input")->check(CLI::PositiveNumber);
    ev->add_option("--csv", o.csv, "per-frame CSV output");
    handlers["eval"] = cmd_eval;

    auto* sw = app.add_subcommand("sweep", "rate-distortion sweep of SRVC, one-shot and bicubic");
    sw->add_option("-i,--input", o.input, "source video")->required();
    sw->add_option("-o,--output", o.output, "RD CSV path")->required();
    sw->add_option("--cdf", o.cdf, "per-frame CSV path");
    sw->add_option("--qualities", o.qualities, "codec quality settings")->delimiter(',');
    sw->add_option("--etas", o.etas, "eta values")->delimiter(',');
    sw->add_option("--taus", o.taus, "update intervals in seconds (inf allowed)")->delimiter(',');
    sw->add_option("--features", o.features, "feature channel counts")->delimiter(',');
    sw->add_option("--eta", o.eta, "eta when --etas is absent");
    sw->add_option("--tau", o.tau, "tau when --taus is absent");
    sw->add_option("--workers", o.workers, "parallel cells")->check(CLI::PositiveNumber);
    add_job_flags(sw, o);
    handlers["sweep"] = cmd_sweep;

    auto* in = app.add_subcommand("inspect", "print model-stream header and update records");
    in->add_option("-i,--input", o.input, "model stream file or encoded directory")->required();
    handlers["inspect"] = cmd_inspect;

    auto* be = app.add_subcommand("bench", "median SR forward latency on a random frame");
    add_model_flags(be, o);
    be->add_option("--height", o.height, "LR height (default 64)")->check(CLI::PositiveNumber);
    be->add_option("--width", o.width, "LR width (default 64)")->check(CLI::PositiveNumber);
    be->add_option("--repetitions", o.repetitions, "timed calls (>= 10)");
    be->add_option("--seed", o.seed, "input and weight seed");
    handlers["bench"] = cmd_bench;

    for (auto* sub : app.get_subcommands({})) {
      sub->add_option("--config", config, "key=value file; explicit flags take precedence");
    }
  }

  CLI::App* active() const {
    for (auto* sub : app.get_subcommands()) return sub;
    return nullptr;
  }
};

// Reads key=value lines into "--key=value" arguments.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#' || line[start] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(n) + " lacks '='");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    out.emplace_back(trim(line.substr(start, eq - start)), trim(line.substr(eq + 1)));
  }
  return out;
}

int run(std::vector<std::string> args) {
  auto cli = std::make_unique<Cli>();
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli->app.parse(reversed);
    if (!cli->config.empty()) {
      // Append config entries for options the command line left unset, then
      // parse again from scratch.
      CLI::App* sub = cli->active();
      std::vector<std::string> extra;
      for (const auto& [key, value] : read_config(cli->config)) {
        if (key == "config") throw InvalidArgument("config files cannot nest");
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) throw InvalidArgument("unknown config key '" + key + "'");
        if (opt->count() > 0) continue;
        if (opt->get_type_size() == 0) {
          if (value == "true" || value == "1") extra.push_back("--" + key);
          else if (value != "false" && value != "0") throw InvalidArgument("config key '" + key + "' expects true/false");
        } else {
          extra.push_back("--" + key + "=" + value);
        }
      }
      if (!extra.empty()) {
        args.insert(args.end(), extra.begin(), extra.end());
        cli = std::make_unique<Cli>();
        std::vector<std::string> again(args.rbegin(), args.rend());
        cli->app.parse(again);
      }
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return cli->app.exit(e);
    const CLI::App* sub = cli->active();
    std::cerr << "error: " << e.what() << "\n\n" << (sub ? sub->help() : cli->app.help());
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  const CLI::App* sub = cli->active();
  try {
    return cli->handlers.at(sub->get_name())(cli->o);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n' << sub->help();
    return kUsage;
  } catch (const CodecUnavailable& e) {
    std::cerr << "codec error: " << e.what() << '\n';
    if (!e.diagnostics().empty()) std::cerr << e.diagnostics() << '\n';
    return kCodec;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kTraining;
  } catch (const DecodeError& e) {
    std::cerr << "stream error: " << e.what() << '\n';
    return kCorrupt;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args));
}
