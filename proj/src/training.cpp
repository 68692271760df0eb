// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/training.hpp"

#include <cmath>
#include <numeric>

#include "poserefine/error.hpp"
#include "poserefine/parallel.hpp"
#include "poserefine/synth.hpp"

namespace poserefine {

using nlohmann::json;

AdamState make_adam_state(Eigen::Index size) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(size);
  s.v = Eigen::VectorXd::Zero(size);
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double lr, const AdamConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DataError("adam_step: parameter, gradient and state lengths differ");
  }
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  params.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.epsilon);
}

json training_config_to_json(const TrainingConfig& c) {
  return {{"batch_size", c.batch_size},
          {"base_lr", c.base_lr},
          {"lr_decay_factor", c.lr_decay_factor},
          {"plateau_patience", c.plateau_patience},
          {"plateau_threshold", c.plateau_threshold},
          {"max_epochs", c.max_epochs},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"seed", c.seed},
          {"shuffle", c.shuffle}};
}

TrainingConfig training_config_from_json(const json& j) {
  try {
    TrainingConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.base_lr = j.value("base_lr", c.base_lr);
    c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
    c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
    c.plateau_threshold = j.value("plateau_threshold", c.plateau_threshold);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.seed = j.value("seed", c.seed);
    c.shuffle = j.value("shuffle", c.shuffle);
    if (c.batch_size < 1 || !(c.base_lr > 0.0) || c.max_epochs < 1 ||
        !(c.lr_decay_factor > 0.0) || c.plateau_patience < 1) {
      throw DataError("training config: invalid values");
    }
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("training config: schema violation: ") + e.what());
  }
}

void Dataset::add(const PatchVolume& volume, FlatResidual target, std::string id) {
  if (volume.channels != channels_ || volume.res != res_) {
    throw DataError("dataset: volume shape does not match dataset");
  }
  volumes_.insert(volumes_.end(), volume.values.begin(), volume.values.end());
  targets_.push_back(std::move(target));
  ids_.push_back(std::move(id));
}

void Dataset::volume(std::size_t i, std::vector<double>& out) const {
  const std::size_t n = volume_size();
  out.resize(n);
  const float* src = volumes_.data() + i * n;
  for (std::size_t k = 0; k < n; ++k) out[k] = src[k];
}

Dataset make_dataset(const Corpus& corpus, const std::string& split, const PatchConfig& patch,
                     Modality modality) {
  const auto entries = corpus.entries(split);
  const SkeletonTopology& topo = corpus.topology;
  std::vector<PatchVolume> volumes(entries.size());
  std::vector<FlatResidual> targets(entries.size());
  Dataset data(6 * topo.limb_count(), patch.out_res);
  // Build in bounded chunks so only a slice of double volumes is alive.
  const std::size_t chunk = 64;
  for (std::size_t begin = 0; begin < entries.size(); begin += chunk) {
    const std::size_t end = std::min(entries.size(), begin + chunk);
    parallel_for(end - begin, [&](std::size_t off) {
      const std::size_t i = begin + off;
      const SceneSample s = load_sample(corpus, *entries[i]);
      volumes[i] = build_volume(s.rgb, s.seg, s.keypoints, topo, patch);
      apply_modality(volumes[i], modality);
      targets[i] = residual_target(s.gt_pose, s.initial_pose, corpus.stats, topo);
    });
    for (std::size_t i = begin; i < end; ++i) {
      data.add(volumes[i], std::move(targets[i]), entries[i]->id);
      volumes[i] = PatchVolume();
    }
  }
  return data;
}

LossGradient batch_gradient(const RegressorParams& params, const RegressorConfig& cfg,
                            const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<LossGradient> per(indices.size());
  parallel_for(indices.size(), [&](std::size_t b) {
    std::vector<double> input;
    data.volume(indices[b], input);
    per[b] = backward(params, cfg, input, data.target(indices[b]));
  });
  LossGradient out;
  out.grad = Eigen::VectorXd::Zero(params.values.size());
  for (const LossGradient& g : per) {
    out.loss += g.loss;
    out.grad += g.grad;
  }
  const double n = static_cast<double>(indices.size());
  out.loss /= n;
  out.grad /= n;
  return out;
}

double dataset_loss(const RegressorParams& params, const RegressorConfig& cfg,
                    const Dataset& data) {
  if (data.empty()) throw DataError("dataset_loss: empty dataset");
  std::vector<double> per(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    std::vector<double> input;
    data.volume(i, input);
    per[i] = loss(forward(params, cfg, input), data.target(i));
  });
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const RegressorConfig& reg_cfg, const TrainingConfig& train_cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  return train(train_set, val_set, reg_cfg, train_cfg, init_params(reg_cfg), on_epoch);
}

TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const RegressorConfig& reg_cfg, const TrainingConfig& train_cfg,
                  RegressorParams params,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train_set.empty()) throw DataError("train: empty training split");
  if (val_set.empty()) throw DataError("train: empty validation split");
  if (train_cfg.batch_size < 1 || !(train_cfg.base_lr > 0.0)) {
    throw DataError("train: batch_size must be >= 1 and base_lr > 0");
  }
  check_params(params, reg_cfg);

  AdamState adam = make_adam_state(params.values.size());
  double lr = train_cfg.base_lr;
  bool decayed = false;
  int stale = 0;

  TrainResult result;
  result.params = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    if (train_cfg.shuffle) {
      Rng rng = stream_rng(train_cfg.seed, static_cast<std::uint64_t>(epoch));
      std::iota(order.begin(), order.end(), 0);
      // Fisher-Yates with an explicit draw so the permutation is fixed by
      // the engine alone.
      for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
      }
    }
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += train_cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(train_cfg.batch_size));
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      const LossGradient g = batch_gradient(params, reg_cfg, train_set, batch);
      if (!std::isfinite(g.loss) || !g.grad.allFinite()) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch starting at " + std::to_string(begin) +
                             " (lr " + std::to_string(lr) + ")");
      }
      loss_sum += g.loss * static_cast<double>(batch.size());
      adam_step(params.values, g.grad, adam, lr, train_cfg.adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = dataset_loss(params, reg_cfg, val_set);
    rec.lr = lr;
    if (!std::isfinite(rec.val_loss)) {
      throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < result.best_val_loss * (1.0 - train_cfg.plateau_threshold)) {
      stale = 0;
    } else {
      ++stale;
    }
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
    if (!decayed && stale >= train_cfg.plateau_patience) {
      lr /= train_cfg.lr_decay_factor;
      decayed = true;
      stale = 0;
    }
  }
  return result;
}

json history_to_json(const TrainResult& result) {
  json epochs = json::array();
  for (const EpochRecord& r : result.history) {
    epochs.push_back({{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"val_loss", r.val_loss},
                      {"lr", r.lr}});
  }
  return {{"version", 1},
          {"best_epoch", result.best_epoch},
          {"best_val_loss", result.best_val_loss},
          {"epochs", epochs}};
}

}  // namespace poserefine
