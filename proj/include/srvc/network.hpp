#pragma once

#include <span>
#include <vector>

#include "srvc/frame.hpp"
#include "srvc/sr_model.hpp"

namespace srvc {

// Scalar-generic evaluation of the SR network. `float` is the training and
// inference path; `double` exists for finite-difference gradient checks.
// Instantiated for float and double.

// Unclamped network output, (kH, kW, 3) interleaved.
template <class T>
std::vector<T> forward_raw(const Frame& lr, std::span<const T> params, const ModelConfig& config);

// Per-frame loss (1/n) * sum over HR pixels of the squared RGB error between
// the clamped output and `hr`.
template <class T>
T frame_loss(const Frame& lr, const Frame& hr, std::span<const T> params, const ModelConfig& config);

// Same loss; adds `weight` * d(loss)/d(params) into `grad`.
template <class T>
T frame_loss_and_gradient(const Frame& lr, const Frame& hr, std::span<const T> params,
                          const ModelConfig& config, std::span<T> grad, T weight = T(1));

}  // namespace srvc
