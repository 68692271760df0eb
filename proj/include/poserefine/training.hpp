// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "poserefine/orientation.hpp"
#include "poserefine/patching.hpp"
#include "poserefine/regressor.hpp"

namespace poserefine {

struct Corpus;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;  // completed steps
};

AdamState make_adam_state(Eigen::Index size);

// One bias-corrected Adam update at learning rate `lr`.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double lr, const AdamConfig& cfg);

// Base learning rate used with a pretrained backbone. The desk-scale default
// below is larger because the regressor starts from random weights.
inline constexpr double kPretrainedBaseLr = 1e-5;

struct TrainingConfig {
  int batch_size = 32;
  double base_lr = 1e-3;
  double lr_decay_factor = 10.0;
  int plateau_patience = 2;         // epochs without improvement before decay
  double plateau_threshold = 1e-4;  // relative validation-loss improvement
  int max_epochs = 20;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

nlohmann::json training_config_to_json(const TrainingConfig& cfg);
TrainingConfig training_config_from_json(const nlohmann::json& j);

// Patch volumes and residual targets held in memory. Volumes are stored as
// float32 to halve the footprint; all arithmetic runs in double.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int channels, int res) : channels_(channels), res_(res) {}

  void add(const PatchVolume& volume, FlatResidual target, std::string id = {});

  std::size_t size() const { return targets_.size(); }
  bool empty() const { return targets_.empty(); }
  int channels() const { return channels_; }
  int res() const { return res_; }
  std::size_t volume_size() const { return static_cast<std::size_t>(channels_) * res_ * res_; }

  // Copies sample i's volume into `out` (resized as needed).
  void volume(std::size_t i, std::vector<double>& out) const;
  const FlatResidual& target(std::size_t i) const { return targets_[i]; }
  const std::string& id(std::size_t i) const { return ids_[i]; }

 private:
  int channels_ = 0;
  int res_ = 0;
  std::vector<float> volumes_;
  std::vector<FlatResidual> targets_;
  std::vector<std::string> ids_;
};

// Volumes (with the modality mask applied) and residual_target(gt, initial)
// for every sample of `split`.
Dataset make_dataset(const Corpus& corpus, const std::string& split, const PatchConfig& patch,
                     Modality modality);

// Mean per-sample loss over the dataset.
double dataset_loss(const RegressorParams& params, const RegressorConfig& cfg,
                    const Dataset& data);

// Mean loss and mean gradient over samples `indices`; per-sample gradients
// are reduced in index order.
LossGradient batch_gradient(const RegressorParams& params, const RegressorConfig& cfg,
                            const Dataset& data, std::span<const std::size_t> indices);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  RegressorParams params;  // best validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

// Mini-batch Adam on the residual-orientation loss. After `plateau_patience`
// consecutive epochs whose validation loss fails to improve on the best by
// `plateau_threshold` (relative), the learning rate is divided by
// `lr_decay_factor` once. Throws NumericalError on a non-finite loss.
TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const RegressorConfig& reg_cfg, const TrainingConfig& train_cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Same as above, starting from `initial` instead of init_params(reg_cfg).
TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const RegressorConfig& reg_cfg, const TrainingConfig& train_cfg,
                  RegressorParams initial,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

nlohmann::json history_to_json(const TrainResult& result);

}  // namespace poserefine
