#include "srvc/pipeline.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "srvc/bytes.hpp"
#include "srvc/error.hpp"
#include "srvc/metrics.hpp"

namespace srvc {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("write failed: " + path.string());
}

class Fingerprint {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
  }
  template <class T>
  void add(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    add(&v, sizeof v);
  }
  void add(const std::string& s) { add(s.data(), s.size()); }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

std::uint64_t job_fingerprint(const EncodeJob& job) {
  Fingerprint f;
  f.add(job.model);
  f.add(job.tau);
  f.add(job.training.lr);
  f.add(job.training.beta1);
  f.add(job.training.beta2);
  f.add(job.training.epsilon);
  f.add(job.training.eta);
  f.add(job.training.epochs_per_segment);
  f.add(job.training.crop);
  f.add(job.training.seed);
  f.add(job.initial.epochs);
  f.add(job.initial.lr);
  f.add(job.initial.crop);
  f.add(job.init_seed);
  f.add(job.codec_id);
  f.add(job.quality);
  f.add(job.target_height);
  f.add(job.target_width);
  f.add(job.source.fps);
  for (const Frame& fr : job.source.frames) f.add(fr.data().data(), fr.size() * sizeof(float));
  if (job.initial_model) f.add(job.initial_model->data(), job.initial_model->size() * sizeof(float));
  return f.value();
}

constexpr std::uint8_t kCheckpointMagic[4] = {'S', 'R', 'C', 'K'};
constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint64_t fingerprint = 0;
  std::vector<SegmentTrainReport> reports;
  ParameterVector initial_trained;
  ModelStreamFile stream;
};

void save_checkpoint(const fs::path& path, const Checkpoint& ck) {
  ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u8(kCheckpointVersion);
  w.u64(ck.fingerprint);
  w.u32(static_cast<std::uint32_t>(ck.reports.size()));
  for (const auto& r : ck.reports) {
    w.f64(r.loss_before);
    w.f64(r.loss_after);
    w.u64(r.selected_count);
    w.u32(static_cast<std::uint32_t>(r.epochs_run));
  }
  w.u64(ck.initial_trained.size());
  for (float v : ck.initial_trained) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    w.u32(bits);
  }
  w.bytes(encode_stream(ck.stream));
  const fs::path tmp = path.string() + ".tmp";
  write_bytes(tmp, w.buffer());
  fs::rename(tmp, path);
}

std::optional<Checkpoint> load_checkpoint(const fs::path& path, std::uint64_t fingerprint) {
  if (path.empty() || !fs::exists(path)) return std::nullopt;
  const auto bytes = read_bytes(path);
  ByteReader r(bytes);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kCheckpointMagic)) || r.u8() != kCheckpointVersion) {
    return std::nullopt;
  }
  Checkpoint ck;
  ck.fingerprint = r.u64();
  if (ck.fingerprint != fingerprint) return std::nullopt;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    SegmentTrainReport rep;
    rep.loss_before = r.f64();
    rep.loss_after = r.f64();
    rep.selected_count = r.u64();
    rep.epochs_run = static_cast<int>(r.u32());
    ck.reports.push_back(rep);
  }
  ck.initial_trained.resize(r.u64());
  for (float& v : ck.initial_trained) {
    const std::uint32_t bits = r.u32();
    std::memcpy(&v, &bits, sizeof v);
  }
  const auto rest = r.bytes(r.remaining());
  ck.stream = decode_stream(rest);
  if (ck.reports.size() > ck.stream.updates.size()) ck.reports.resize(ck.stream.updates.size());
  return ck;
}

bool is_one_shot(std::uint32_t tau_ms) { return tau_ms == kOneShotTauMs; }

}  // namespace

EncodeResult encode(const EncodeJob& job) {
  job.source.validate();
  if (job.source.frames.empty()) throw InvalidArgument("cannot encode an empty video");
  job.model.validate();
  job.training.validate();
  const int k = job.model.scale;
  const int hr_h = job.target_height > 0 ? job.target_height : job.source.height();
  const int hr_w = job.target_width > 0 ? job.target_width : job.source.width();

  const VideoSequence lr = area_downsample(job.source, k);
  ContentStream content = content_encode(lr, job.codec_id, job.quality, job.external);
  const VideoSequence lr_decoded = content_decode(content, job.external);

  const int sr_h = lr.height() * k, sr_w = lr.width() * k;
  std::vector<Frame> hr_train;
  hr_train.reserve(job.source.frame_count());
  for (const Frame& f : job.source.frames) {
    hr_train.push_back(f.height() == sr_h && f.width() == sr_w ? f : bicubic_resize(f, sr_h, sr_w));
  }

  const SegmentPlan plan = plan_segments(job.source, job.tau);
  const StreamHeader header = StreamHeader::make(job.model, job.tau, job.init_seed);

  EncodeResult result;
  Manifest& m = result.encoded.manifest;
  m.fps = job.source.fps;
  m.frames = job.source.frame_count();
  m.hr_width = hr_w;
  m.hr_height = hr_h;
  m.scale = k;
  m.tau_ms = header.tau_ms;
  m.codec_id = content.codec_id;
  m.quality = content.quality;
  m.resized = sr_h != hr_h || sr_w != hr_w;
  m.segments = plan.boundaries;

  const std::uint64_t fingerprint = job_fingerprint(job);
  Checkpoint ck;
  ck.fingerprint = fingerprint;
  if (auto resumed = load_checkpoint(job.checkpoint, fingerprint)) {
    ck = std::move(*resumed);
  } else {
    if (job.initial_model) {
      if (job.initial_model->size() != header.param_count) {
        throw InvalidArgument("initial model length does not match the model config");
      }
      ck.initial_trained = *job.initial_model;
    } else {
      TrainingConfig dense = job.training;
      dense.lr = job.initial.lr;
      dense.crop = job.initial.crop;
      ck.initial_trained = train_dense(init_parameters(job.model, job.init_seed), lr_decoded.frames, hr_train,
                                       job.model, dense, job.initial.epochs);
    }
    ck.stream.header = header;
    ck.stream.initial_model = quantize_model(ck.initial_trained);
    if (!job.checkpoint.empty()) save_checkpoint(job.checkpoint, ck);
  }

  std::vector<ParameterVector> states = replay(ck.stream);
  for (const auto& s : states) result.state_hashes.push_back(hash_parameters(s));
  ParameterVector theta = states.back();

  if (!is_one_shot(header.tau_ms)) {
    for (std::size_t s = ck.stream.updates.size(); s < plan.count(); ++s) {
      const auto [begin, end] = plan.boundaries[s];
      const std::span<const Frame> lr_seg(lr_decoded.frames.data() + begin, end - begin);
      const std::span<const Frame> hr_seg(hr_train.data() + begin, end - begin);
      AdaptResult step =
          adapt_segment(theta, lr_seg, hr_seg, job.model, job.training, static_cast<std::uint32_t>(s + 1));
      theta = std::move(step.params);
      result.state_hashes.push_back(hash_parameters(theta));
      ck.stream.updates.push_back(std::move(step.update));
      ck.reports.push_back(step.report);
      if (!job.checkpoint.empty()) save_checkpoint(job.checkpoint, ck);
    }
  }

  result.encoded.content = std::move(content);
  result.encoded.model = encode_stream(ck.stream);
  result.initial_trained = std::move(ck.initial_trained);
  result.reports = std::move(ck.reports);
  return result;
}

DecodeResult decode(const EncodedVideo& encoded, std::size_t first, std::size_t last,
                    const ExternalCodecConfig& external) {
  const Manifest& m = encoded.manifest;
  const ModelStreamFile file = decode_stream(encoded.model);
  if (file.header.config.scale != m.scale) throw CorruptionError("model stream scale differs from manifest");
  if (encoded.content.frame_count != m.frames) throw CorruptionError("content frame count differs from manifest");
  const bool one_shot = is_one_shot(file.header.tau_ms);
  if (one_shot && !file.updates.empty()) throw CorruptionError("one-shot stream carries update records");
  if (!one_shot && file.updates.size() != m.segments.size()) {
    throw CorruptionError("model stream has " + std::to_string(file.updates.size()) + " update records for " +
                          std::to_string(m.segments.size()) + " segments");
  }

  DecodeResult result;
  const std::vector<ParameterVector> states = replay(file);
  for (const auto& s : states) result.state_hashes.push_back(hash_parameters(s));

  const VideoSequence lr = content_decode(encoded.content, external);
  last = std::min(last, lr.frame_count());
  if (first > last) throw InvalidArgument("empty or inverted frame range");
  result.video.fps = lr.fps;
  for (std::size_t seg = 0; seg < m.segments.size(); ++seg) {
    const auto [begin, end] = m.segments[seg];
    const ParameterVector& theta = one_shot ? states.front() : states[seg + 1];
    for (std::size_t i = std::max(begin, first); i < std::min(end, last); ++i) {
      Frame hr = forward(lr.frames[i], theta, file.header.config);
      if (hr.height() != m.hr_height || hr.width() != m.hr_width) hr = bicubic_resize(hr, m.hr_height, m.hr_width);
      result.video.frames.push_back(std::move(hr));
    }
  }
  return result;
}

double bits_per_pixel(std::uint64_t content_bits, std::uint64_t model_bits, std::size_t frames, int height,
                      int width) {
  if (frames == 0) throw InvalidArgument("bits_per_pixel needs at least one frame");
  if (height < 1 || width < 1) throw InvalidArgument("bits_per_pixel needs positive dimensions");
  const double pixels = static_cast<double>(frames) * height * width;
  return static_cast<double>(content_bits + model_bits) / pixels;
}

std::string format_manifest(const Manifest& m) {
  std::ostringstream os;
  os.precision(17);
  os << "fps=" << m.fps << '\n'
     << "frames=" << m.frames << '\n'
     << "hr_w=" << m.hr_width << '\n'
     << "hr_h=" << m.hr_height << '\n'
     << "k=" << m.scale << '\n'
     << "tau_ms=";
  if (is_one_shot(m.tau_ms)) os << "inf";
  else os << m.tau_ms;
  os << '\n'
     << "codec_id=" << m.codec_id << '\n'
     << "quality=" << m.quality << '\n'
     << "resize=" << (m.resized ? "bicubic" : "none") << '\n'
     << "segments=";
  for (std::size_t i = 0; i < m.segments.size(); ++i) {
    if (i) os << ',';
    os << m.segments[i].first << ':' << m.segments[i].second;
  }
  os << '\n';
  return os.str();
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  bool seen_frames = false, seen_k = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw DecodeError("manifest line without '=': " + line);
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "fps") m.fps = std::stod(value);
      else if (key == "frames") m.frames = std::stoull(value), seen_frames = true;
      else if (key == "hr_w") m.hr_width = std::stoi(value);
      else if (key == "hr_h") m.hr_height = std::stoi(value);
      else if (key == "k") m.scale = std::stoi(value), seen_k = true;
      else if (key == "tau_ms") m.tau_ms = value == "inf" ? kOneShotTauMs : static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "codec_id") m.codec_id = value;
      else if (key == "quality") m.quality = std::stoi(value);
      else if (key == "resize") m.resized = value == "bicubic";
      else if (key == "segments") {
        std::istringstream segs(value);
        std::string item;
        while (std::getline(segs, item, ',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) throw DecodeError("bad segment entry: " + item);
          m.segments.emplace_back(std::stoull(item.substr(0, colon)), std::stoull(item.substr(colon + 1)));
        }
      }
    }
  } catch (const std::logic_error& e) {
    throw DecodeError(std::string("malformed manifest: ") + e.what());
  }
  if (!seen_frames || !seen_k || !(m.fps > 0.0) || m.hr_width < 1 || m.hr_height < 1) {
    throw DecodeError("manifest is missing required keys");
  }
  if (m.segments.empty()) m.segments = plan_segments(m.frames, m.fps, is_one_shot(m.tau_ms) ? kOneShot : m.tau_ms / 1000.0).boundaries;
  return m;
}

void save_encoded(const fs::path& dir, const EncodedVideo& encoded) {
  const fs::path staging = dir.string() + ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging);
  write_content_file(staging / kContentFile, encoded.content);
  write_bytes(staging / kModelFile, encoded.model);
  {
    std::ofstream out(staging / kManifestFile);
    out << format_manifest(encoded.manifest);
  }
  fs::remove_all(dir);
  fs::rename(staging, dir);
}

EncodedVideo load_encoded(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("not an encoded video directory: " + dir.string());
  EncodedVideo e;
  e.content = read_content_file(dir / kContentFile);
  e.model = read_bytes(dir / kModelFile);
  const auto text = read_bytes(dir / kManifestFile);
  e.manifest = parse_manifest(std::string(text.begin(), text.end()));
  return e;
}

}  // namespace srvc
