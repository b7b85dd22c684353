#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srvc/sr_model.hpp"

namespace srvc {

// One segment's model delta: sorted parameter indices and binary16 changes.
struct SparseUpdate {
  std::uint32_t segment_index = 0;
  std::vector<std::uint32_t> indices;
  std::vector<std::uint16_t> deltas;

  std::size_t size() const noexcept { return indices.size(); }
  friend bool operator==(const SparseUpdate&, const SparseUpdate&) = default;
};

inline constexpr std::uint8_t kStreamVersion = 1;
inline constexpr std::uint32_t kOneShotTauMs = 0xFFFFFFFFu;
inline constexpr std::size_t kHeaderBytes = 30;

// ceil(log2 M), at least 1.
int index_bits_for(std::size_t param_count);

// Model stream file layout (all integers big-endian):
//
//   "SRVC" | version u8 | M u32 | F u16 | P u8 | k u8 | C_g u16 | C_r u16 |
//   tau_ms u32 | init_seed u64 | index_bits u8            (30 bytes)
//   M x u16 binary16 initial parameters, canonical order
//   per update: segment u32 | count u32 |
//               count x index_bits packed indices, MSB first, zero-padded |
//               count x u16 binary16 deltas
struct StreamHeader {
  std::uint8_t version = kStreamVersion;
  std::uint32_t param_count = 0;
  ModelConfig config;
  std::uint32_t tau_ms = kOneShotTauMs;
  std::uint64_t init_seed = 0;
  std::uint8_t index_bits = 0;

  static StreamHeader make(const ModelConfig& config, double tau_seconds, std::uint64_t init_seed);
  double tau_seconds() const noexcept;
  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct ModelStreamFile {
  StreamHeader header;
  std::vector<std::uint16_t> initial_model;  // binary16 bits
  std::vector<SparseUpdate> updates;

  friend bool operator==(const ModelStreamFile&, const ModelStreamFile&) = default;
};

std::vector<std::uint8_t> encode_stream(const ModelStreamFile& file);
// Throws FormatError (magic/version), DecodeError (truncation) or
// CorruptionError (out-of-range or unordered content).
ModelStreamFile decode_stream(std::span<const std::uint8_t> bytes);

void write_stream_file(const std::filesystem::path& path, const ModelStreamFile& file);
ModelStreamFile read_stream_file(const std::filesystem::path& path);

// Serialized size of one update record, including its alignment pad.
std::size_t record_bytes(std::size_t count, int index_bits);
// Analytic file size for a model of M parameters and the given record sizes.
std::size_t stream_bytes(std::size_t param_count, std::span<const std::size_t> record_counts);

std::vector<std::uint16_t> quantize_model(std::span<const float> params);
ParameterVector widen_model(std::span<const std::uint16_t> bits);

// theta[i] += widen(delta) on selected indices; all else untouched.
void apply_update_in_place(ParameterVector& params, const SparseUpdate& update);
ParameterVector apply_update(const ParameterVector& params, const SparseUpdate& update);

// Replays every update over the initial model; returns theta_t for t = 0..N.
std::vector<ParameterVector> replay(const ModelStreamFile& file);

// Upper-bound rate (16 + ceil(log2 M)) * ceil(eta M) / tau, in bits/s.
double model_bitrate(std::size_t param_count, double eta, double tau_seconds);

// ceil(eta * M), tolerant of floating-point noise in the product.
std::size_t selection_count(std::size_t param_count, double eta);

// FNV-1a over the raw float bits, for encoder/decoder sync checks.
std::uint64_t hash_parameters(std::span<const float> params);

}  // namespace srvc
