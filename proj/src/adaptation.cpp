#include "srvc/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "srvc/error.hpp"
#include "srvc/half.hpp"
#include "srvc/network.hpp"

namespace srvc {

void TrainingConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("Adam decay rates must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (epochs_per_segment < 0) throw InvalidArgument("epochs_per_segment must be non-negative");
}

namespace {

void check_segment(std::span<const Frame> lr, std::span<const Frame> hr) {
  if (lr.empty()) throw InvalidArgument("segment has no frames");
  if (lr.size() != hr.size()) throw InvalidArgument("LR and HR frame counts differ");
}

void adam_update(float& param, float grad, double& m, double& v, std::uint64_t step,
                 const TrainingConfig& c) {
  const double g = grad;
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g * g;
  const double m_hat = m / (1.0 - std::pow(c.beta1, static_cast<double>(step)));
  const double v_hat = v / (1.0 - std::pow(c.beta2, static_cast<double>(step)));
  param = static_cast<float>(static_cast<double>(param) - c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon));
}

[[noreturn]] void non_finite(std::size_t index, float grad, std::uint64_t step) {
  std::ostringstream os;
  os << "non-finite gradient " << grad << " at parameter " << index << " (Adam step " << step << ")";
  throw TrainingError(os.str());
}

}  // namespace

double segment_loss(std::span<const float> params, std::span<const Frame> lr_frames,
                    std::span<const Frame> hr_frames, const ModelConfig& config) {
  check_segment(lr_frames, hr_frames);
  double sum = 0.0;
  for (std::size_t i = 0; i < lr_frames.size(); ++i) {
    sum += frame_loss<float>(lr_frames[i], hr_frames[i], params, config);
  }
  return sum / static_cast<double>(lr_frames.size());
}

void masked_adam_step(std::span<float> params, std::span<const float> grads, std::span<const std::uint32_t> mask,
                      AdamState& state, const TrainingConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InvalidArgument("Adam buffers do not match the parameter count");
  }
  for (std::uint32_t i : mask) {
    if (i >= params.size()) throw InvalidArgument("mask index out of range");
    if (!std::isfinite(grads[i])) non_finite(i, grads[i], state.step + 1);
  }
  ++state.step;
  for (std::uint32_t i : mask) adam_update(params[i], grads[i], state.m[i], state.v[i], state.step, config);
}

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state,
               const TrainingConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InvalidArgument("Adam buffers do not match the parameter count");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) non_finite(i, grads[i], state.step + 1);
  }
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update(params[i], grads[i], state.m[i], state.v[i], state.step, config);
  }
}

Frame crop(const Frame& frame, int y, int x, int height, int width) {
  if (y < 0 || x < 0 || height < 1 || width < 1 || y + height > frame.height() || x + width > frame.width()) {
    throw InvalidArgument("crop window outside the frame");
  }
  Frame out(height, width);
  for (int r = 0; r < height; ++r) {
    const auto src = frame.data().subspan(
        (static_cast<std::size_t>(y + r) * frame.width() + x) * kChannels, static_cast<std::size_t>(width) * kChannels);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r) * width * kChannels);
  }
  return out;
}

std::pair<Frame, Frame> random_half_crop(const Frame& hr, const Frame& lr, int scale, Rng& rng) {
  if (hr.height() != lr.height() * scale || hr.width() != lr.width() * scale) {
    throw InvalidArgument("HR frame must be exactly k times the LR frame");
  }
  const int ch = lr.height() / 2;
  const int cw = lr.width() / 2;
  if (ch < 1 || cw < 1) throw InvalidArgument("frame too small for a half-size crop");
  const int y = static_cast<int>(rng() % static_cast<std::uint64_t>(lr.height() - ch + 1));
  const int x = static_cast<int>(rng() % static_cast<std::uint64_t>(lr.width() - cw + 1));
  return {crop(lr, y, x, ch, cw), crop(hr, y * scale, x * scale, ch * scale, cw * scale)};
}

std::vector<std::uint32_t> select_top_fraction(std::span<const float> changes, double eta) {
  const std::size_t n = selection_count(changes.size(), eta);
  std::vector<std::uint32_t> order(changes.size());
  std::iota(order.begin(), order.end(), 0u);
  auto larger = [&changes](std::uint32_t a, std::uint32_t b) {
    const float ma = std::abs(changes[a]);
    const float mb = std::abs(changes[b]);
    return ma != mb ? ma > mb : a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), larger);
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

void train_epochs(ParameterVector& params, std::span<const Frame> lr_frames, std::span<const Frame> hr_frames,
                  const ModelConfig& model, const TrainingConfig& config, int epochs,
                  std::span<const std::uint32_t> mask, AdamState& state, Rng& rng) {
  check_segment(lr_frames, hr_frames);
  std::vector<float> grad(params.size());
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t f = 0; f < lr_frames.size(); ++f) {
      std::fill(grad.begin(), grad.end(), 0.0f);
      if (config.crop) {
        const auto [lr, hr] = random_half_crop(hr_frames[f], lr_frames[f], model.scale, rng);
        frame_loss_and_gradient<float>(lr, hr, params, model, grad);
      } else {
        frame_loss_and_gradient<float>(lr_frames[f], hr_frames[f], params, model, grad);
      }
      if (mask.empty()) adam_step(params, grad, state, config);
      else masked_adam_step(params, grad, mask, state, config);
    }
  }
}

std::vector<std::uint32_t> probe_and_select(std::span<const float> params, std::span<const Frame> lr_frames,
                                            std::span<const Frame> hr_frames, const ModelConfig& model,
                                            const TrainingConfig& config, const Rng& rng) {
  config.validate();
  ParameterVector probe(params.begin(), params.end());
  AdamState state(probe.size());
  Rng probe_rng = rng;
  train_epochs(probe, lr_frames, hr_frames, model, config, 1, {}, state, probe_rng);
  std::vector<float> change(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) change[i] = probe[i] - params[i];
  return select_top_fraction(change, config.eta);
}

namespace {

Rng segment_rng(std::uint64_t seed, std::uint64_t segment) {
  return Rng(seed ^ (0x9E3779B97F4A7C15ull * (segment + 1)));
}

}  // namespace

AdaptResult adapt_segment(const ParameterVector& transmitted, std::span<const Frame> lr_frames,
                          std::span<const Frame> hr_frames, const ModelConfig& model,
                          const TrainingConfig& config, std::uint32_t segment_index) {
  config.validate();
  check_segment(lr_frames, hr_frames);
  if (transmitted.size() != param_count(model)) throw InvalidArgument("parameter vector length mismatch");

  AdaptResult result;
  result.report.loss_before = segment_loss(transmitted, lr_frames, hr_frames, model);

  Rng rng = segment_rng(config.seed, segment_index);
  const std::vector<std::uint32_t> selected = probe_and_select(transmitted, lr_frames, hr_frames, model, config, rng);

  ParameterVector trained = transmitted;
  AdamState state(trained.size());
  train_epochs(trained, lr_frames, hr_frames, model, config, config.epochs_per_segment, selected, state, rng);

  SparseUpdate& update = result.update;
  update.segment_index = segment_index;
  update.indices = selected;
  update.deltas.reserve(selected.size());
  for (std::uint32_t i : selected) update.deltas.push_back(to_half_bits(trained[i] - transmitted[i]));

  result.params = apply_update(transmitted, update);
  result.report.loss_after = segment_loss(result.params, lr_frames, hr_frames, model);
  result.report.selected_count = selected.size();
  result.report.epochs_run = config.epochs_per_segment;
  return result;
}

ParameterVector train_dense(const ParameterVector& init, std::span<const Frame> lr_frames,
                            std::span<const Frame> hr_frames, const ModelConfig& model,
                            const TrainingConfig& config, int epochs) {
  config.validate();
  ParameterVector params = init;
  AdamState state(params.size());
  Rng rng(config.seed);
  train_epochs(params, lr_frames, hr_frames, model, config, epochs, {}, state, rng);
  return params;
}

}  // namespace srvc
