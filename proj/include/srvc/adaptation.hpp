#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "srvc/frame.hpp"
#include "srvc/model_stream.hpp"
#include "srvc/sr_model.hpp"

namespace srvc {

struct TrainingConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double eta = 0.01;            // fraction of parameters updated per segment
  int epochs_per_segment = 16;
  bool crop = true;             // half-size random crops
  std::uint64_t seed = 0;

  void validate() const;
};

struct SegmentTrainReport {
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::size_t selected_count = 0;
  int epochs_run = 0;
};

// Adam moments and step counter. Moments of parameters outside the mask are
// never touched by a masked step.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

using Rng = std::mt19937_64;

// Mean over frames of the per-frame loss (1/n) sum ||Y - X||^2.
double segment_loss(std::span<const float> params, std::span<const Frame> lr_frames,
                    std::span<const Frame> hr_frames, const ModelConfig& config);

// One Adam step restricted to `mask` (sorted indices). Throws TrainingError
// on non-finite gradients inside the mask.
void masked_adam_step(std::span<float> params, std::span<const float> grads, std::span<const std::uint32_t> mask,
                      AdamState& state, const TrainingConfig& config);
// One Adam step on every parameter.
void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state,
               const TrainingConfig& config);

// Aligned (LR, HR) crops at half the LR size; offsets are drawn on the LR grid.
std::pair<Frame, Frame> random_half_crop(const Frame& hr, const Frame& lr, int scale, Rng& rng);

Frame crop(const Frame& frame, int y, int x, int height, int width);

// Indices of the ceil(eta M) largest |changes|, ties to the lower index,
// returned in increasing order.
std::vector<std::uint32_t> select_top_fraction(std::span<const float> changes, double eta);

// One epoch of unmasked Adam from a copy of `params` (fresh moments, a copy
// of `rng`), then the top-eta parameters by absolute change. Neither
// `params` nor `rng` is modified.
std::vector<std::uint32_t> probe_and_select(std::span<const float> params, std::span<const Frame> lr_frames,
                                            std::span<const Frame> hr_frames, const ModelConfig& model,
                                            const TrainingConfig& config, const Rng& rng);

// Runs `epochs` passes of Adam (one step per frame, in order). An empty
// mask trains every parameter.
void train_epochs(ParameterVector& params, std::span<const Frame> lr_frames, std::span<const Frame> hr_frames,
                  const ModelConfig& model, const TrainingConfig& config, int epochs,
                  std::span<const std::uint32_t> mask, AdamState& state, Rng& rng);

struct AdaptResult {
  SparseUpdate update;
  ParameterVector params;  // transmitted state after this update
  SegmentTrainReport report;
};

// Sparse adaptation of the transmitted state to one segment. The returned
// params equal apply_update(transmitted, update) bit-for-bit.
AdaptResult adapt_segment(const ParameterVector& transmitted, std::span<const Frame> lr_frames,
                          std::span<const Frame> hr_frames, const ModelConfig& model,
                          const TrainingConfig& config, std::uint32_t segment_index);

// Dense training from `init` for `epochs` passes; used for the initial model.
ParameterVector train_dense(const ParameterVector& init, std::span<const Frame> lr_frames,
                            std::span<const Frame> hr_frames, const ModelConfig& model,
                            const TrainingConfig& config, int epochs);

}  // namespace srvc
