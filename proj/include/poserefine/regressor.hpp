// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poserefine/orientation.hpp"
#include "poserefine/patching.hpp"

namespace poserefine {

struct ConvSpec {
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

enum class Pooling { kGlobalAverage, kFlatten };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

// Architecture of the residual-orientation regressor: a conv stack with ReLU
// ("same" padding, kernel / 2), pooling, hidden FC layers with ReLU, and a
// linear output layer of size 3(N-1).
struct RegressorConfig {
  int input_channels = 96;
  int patch_res = 32;
  std::vector<ConvSpec> conv = {{16, 3, 2}, {32, 3, 2}};
  Pooling pooling = Pooling::kFlatten;
  std::vector<int> fc_widths = {64};
  int output_dim = 48;
  std::uint64_t seed = 0;
  Modality modality = Modality::kFused;

  friend bool operator==(const RegressorConfig&, const RegressorConfig&) = default;
};

// Default architecture for a topology with `limb_count` limbs.
RegressorConfig default_regressor_config(int limb_count, int patch_res = 32);

// Throws DataError on inconsistent shapes.
void check_config(const RegressorConfig& cfg);

struct LayerShape {
  std::string name;  // e.g. "conv0.weight", "fc1.bias"
  std::vector<int> dims;
  std::int64_t offset = 0;
  std::int64_t size = 0;
};

inline constexpr std::uint32_t kParamsVersion = 1;

struct RegressorParams {
  Eigen::VectorXd values;
  std::vector<LayerShape> layers;
  std::uint32_t version = kParamsVersion;
};

// Shape table implied by a config; offsets follow layer order.
std::vector<LayerShape> layer_shapes(const RegressorConfig& cfg);

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from cfg.seed; biases zero.
RegressorParams init_params(const RegressorConfig& cfg);

// Throws DataError when params do not match the config or hold non-finite
// values.
void check_params(const RegressorParams& params, const RegressorConfig& cfg);

FlatResidual forward(const RegressorParams& params, const RegressorConfig& cfg,
                     const PatchVolume& volume);
FlatResidual forward(const RegressorParams& params, const RegressorConfig& cfg,
                     std::span<const double> input);

// Inference entry point; same contract as forward.
FlatResidual predict(const RegressorParams& params, const RegressorConfig& cfg,
                     const PatchVolume& volume);

// Sum over limbs of the squared Euclidean norm of the per-limb difference.
double loss(const FlatResidual& pred, const FlatResidual& target);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd grad;  // same layout as RegressorParams::values
};

// Exact gradient of loss(forward(params, volume), target) w.r.t. params.
LossGradient backward(const RegressorParams& params, const RegressorConfig& cfg,
                      const PatchVolume& volume, const FlatResidual& target);
LossGradient backward(const RegressorParams& params, const RegressorConfig& cfg,
                      std::span<const double> input, const FlatResidual& target);

// Activations after the conv stack (post-ReLU, before pooling), flattened
// channel-major. Exposed for diagnostics and homogeneity checks.
Eigen::VectorXd conv_features(const RegressorParams& params, const RegressorConfig& cfg,
                              const PatchVolume& volume);

}  // namespace poserefine
