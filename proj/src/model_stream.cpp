#include "srvc/model_stream.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "srvc/bytes.hpp"
#include "srvc/error.hpp"
#include "srvc/half.hpp"

namespace srvc {

namespace {
constexpr std::uint8_t kMagic[4] = {'S', 'R', 'V', 'C'};
}

int index_bits_for(std::size_t param_count) {
  if (param_count <= 1) return 1;
  return static_cast<int>(std::bit_width(param_count - 1));
}

StreamHeader StreamHeader::make(const ModelConfig& config, double tau_seconds, std::uint64_t init_seed) {
  config.validate();
  if (config.features > 0xFFFF || config.patch > 0xFF || config.scale > 0xFF || config.gen_hidden > 0xFFFF ||
      config.reg_hidden > 0xFFFF) {
    throw InvalidArgument("model config does not fit the stream header fields");
  }
  StreamHeader h;
  const std::size_t m = srvc::param_count(config);
  if (m > 0xFFFFFFFFu) throw InvalidArgument("model too large for a 32-bit parameter count");
  h.param_count = static_cast<std::uint32_t>(m);
  h.config = config;
  if (std::isinf(tau_seconds)) {
    h.tau_ms = kOneShotTauMs;
  } else {
    if (!(tau_seconds > 0.0)) throw InvalidArgument("tau must be positive");
    const double ms = std::round(tau_seconds * 1000.0);
    if (ms >= static_cast<double>(kOneShotTauMs)) throw InvalidArgument("tau too large");
    h.tau_ms = static_cast<std::uint32_t>(ms);
  }
  h.init_seed = init_seed;
  h.index_bits = static_cast<std::uint8_t>(index_bits_for(m));
  return h;
}

double StreamHeader::tau_seconds() const noexcept {
  return tau_ms == kOneShotTauMs ? std::numeric_limits<double>::infinity() : tau_ms / 1000.0;
}

std::size_t record_bytes(std::size_t count, int index_bits) {
  return 8 + (count * static_cast<std::size_t>(index_bits) + 7) / 8 + 2 * count;
}

std::size_t stream_bytes(std::size_t param_count, std::span<const std::size_t> record_counts) {
  const int bits = index_bits_for(param_count);
  std::size_t total = kHeaderBytes + 2 * param_count;
  for (std::size_t c : record_counts) total += record_bytes(c, bits);
  return total;
}

std::vector<std::uint8_t> encode_stream(const ModelStreamFile& file) {
  const StreamHeader& h = file.header;
  const std::uint32_t m = h.param_count;
  if (file.initial_model.size() != m) throw InvalidArgument("initial model length differs from header M");
  if (h.index_bits != index_bits_for(m)) throw InvalidArgument("header index_bits inconsistent with M");

  ByteWriter w;
  w.bytes(kMagic);
  w.u8(h.version);
  w.u32(m);
  w.u16(static_cast<std::uint16_t>(h.config.features));
  w.u8(static_cast<std::uint8_t>(h.config.patch));
  w.u8(static_cast<std::uint8_t>(h.config.scale));
  w.u16(static_cast<std::uint16_t>(h.config.gen_hidden));
  w.u16(static_cast<std::uint16_t>(h.config.reg_hidden));
  w.u32(h.tau_ms);
  w.u64(h.init_seed);
  w.u8(h.index_bits);
  for (std::uint16_t v : file.initial_model) w.u16(v);

  std::uint32_t last_segment = 0;
  for (const SparseUpdate& u : file.updates) {
    if (u.segment_index <= last_segment) throw InvalidArgument("update segment indices must increase from 1");
    last_segment = u.segment_index;
    if (u.indices.size() != u.deltas.size()) throw InvalidArgument("update indices/deltas length mismatch");
    w.u32(u.segment_index);
    w.u32(static_cast<std::uint32_t>(u.indices.size()));
    BitWriter bits;
    for (std::size_t i = 0; i < u.indices.size(); ++i) {
      if (u.indices[i] >= m) throw InvalidArgument("update index out of range");
      if (i > 0 && u.indices[i] <= u.indices[i - 1]) throw InvalidArgument("update indices must be increasing");
      bits.put(u.indices[i], h.index_bits);
    }
    w.bytes(bits.take());
    for (std::uint16_t d : u.deltas) w.u16(d);
  }
  return w.take();
}

ModelStreamFile decode_stream(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw FormatError("not a model stream (bad magic)");
  }
  r.bytes(4);
  ModelStreamFile file;
  StreamHeader& h = file.header;
  h.version = r.u8();
  if (h.version != kStreamVersion) {
    throw FormatError("unsupported model stream version " + std::to_string(h.version));
  }
  h.param_count = r.u32();
  h.config.features = r.u16();
  h.config.patch = r.u8();
  h.config.scale = r.u8();
  h.config.gen_hidden = r.u16();
  h.config.reg_hidden = r.u16();
  h.tau_ms = r.u32();
  h.init_seed = r.u64();
  h.index_bits = r.u8();
  try {
    if (param_count(h.config) != h.param_count) throw CorruptionError("header M does not match model config");
  } catch (const InvalidArgument&) {
    throw CorruptionError("header carries an invalid model config");
  }
  if (h.index_bits != index_bits_for(h.param_count)) throw CorruptionError("header index_bits does not match M");

  const auto init = r.bytes(2 * static_cast<std::size_t>(h.param_count));
  file.initial_model.resize(h.param_count);
  for (std::size_t i = 0; i < h.param_count; ++i) {
    file.initial_model[i] = static_cast<std::uint16_t>((init[2 * i] << 8) | init[2 * i + 1]);
  }

  std::uint32_t last_segment = 0;
  for (std::size_t rec = 0; !r.done(); ++rec) {
    const std::string where = "update record " + std::to_string(rec + 1);
    try {
      SparseUpdate u;
      u.segment_index = r.u32();
      if (u.segment_index <= last_segment) {
        throw CorruptionError(where + ": segment index " + std::to_string(u.segment_index) + " out of order");
      }
      last_segment = u.segment_index;
      const std::uint32_t count = r.u32();
      if (count > h.param_count) throw CorruptionError(where + ": count exceeds M");
      const auto packed = r.bytes((static_cast<std::size_t>(count) * h.index_bits + 7) / 8);
      BitReader bits(packed);
      u.indices.resize(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        u.indices[i] = bits.get(h.index_bits);
        if (u.indices[i] >= h.param_count) {
          throw CorruptionError(where + ": index " + std::to_string(u.indices[i]) + " >= M");
        }
        if (i > 0 && u.indices[i] <= u.indices[i - 1]) throw CorruptionError(where + ": indices not increasing");
      }
      u.deltas.resize(count);
      for (std::uint32_t i = 0; i < count; ++i) u.deltas[i] = r.u16();
      file.updates.push_back(std::move(u));
    } catch (const CorruptionError&) {
      throw;
    } catch (const DecodeError& e) {
      throw DecodeError(where + ": " + e.what());
    }
  }
  return file;
}

void write_stream_file(const std::filesystem::path& path, const ModelStreamFile& file) {
  const auto bytes = encode_stream(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelStreamFile read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_stream(bytes);
}

std::vector<std::uint16_t> quantize_model(std::span<const float> params) {
  std::vector<std::uint16_t> out(params.size());
  std::transform(params.begin(), params.end(), out.begin(), to_half_bits);
  return out;
}

ParameterVector widen_model(std::span<const std::uint16_t> bits) {
  ParameterVector out(bits.size());
  std::transform(bits.begin(), bits.end(), out.begin(), from_half_bits);
  return out;
}

void apply_update_in_place(ParameterVector& params, const SparseUpdate& update) {
  if (update.indices.size() != update.deltas.size()) throw CorruptionError("update indices/deltas mismatch");
  for (std::size_t i = 0; i < update.indices.size(); ++i) {
    if (update.indices[i] >= params.size()) {
      throw CorruptionError("update for segment " + std::to_string(update.segment_index) + " has index " +
                            std::to_string(update.indices[i]) + " beyond M");
    }
  }
  for (std::size_t i = 0; i < update.indices.size(); ++i) {
    params[update.indices[i]] += from_half_bits(update.deltas[i]);
  }
}

ParameterVector apply_update(const ParameterVector& params, const SparseUpdate& update) {
  ParameterVector out = params;
  apply_update_in_place(out, update);
  return out;
}

std::vector<ParameterVector> replay(const ModelStreamFile& file) {
  std::vector<ParameterVector> states;
  states.push_back(widen_model(file.initial_model));
  for (const SparseUpdate& u : file.updates) states.push_back(apply_update(states.back(), u));
  return states;
}

std::size_t selection_count(std::size_t param_count, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in [0, 1]");
  const double x = eta * static_cast<double>(param_count);
  const double nearest = std::round(x);
  const double n = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  return std::min(param_count, static_cast<std::size_t>(n));
}

double model_bitrate(std::size_t param_count, double eta, double tau_seconds) {
  if (!(tau_seconds > 0.0)) throw InvalidArgument("tau must be positive");
  if (param_count < 1) throw InvalidArgument("model must have at least one parameter");
  if (std::isinf(tau_seconds)) return 0.0;
  const double per_param = 16.0 + index_bits_for(param_count);
  return per_param * static_cast<double>(selection_count(param_count, eta)) / tau_seconds;
}

std::uint64_t hash_parameters(std::span<const float> params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (float v : params) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 4; ++i) {
      h ^= (bits >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace srvc
