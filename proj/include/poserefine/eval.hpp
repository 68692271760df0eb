// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "poserefine/orientation.hpp"
#include "poserefine/patching.hpp"
#include "poserefine/skeleton.hpp"
#include "poserefine/store.hpp"

namespace poserefine {

struct Corpus;
struct SceneSample;

// Root-aligned mean per-joint position error in mm, no rotation or scale
// alignment.
double mpjpe(const Pose3D& pred, const Pose3D& gt, const SkeletonTopology& topo);

// Root-aligned per-joint Euclidean errors.
std::vector<double> joint_errors(const Pose3D& pred, const Pose3D& gt,
                                 const SkeletonTopology& topo);

// Angle between corresponding limb displacements, degrees.
std::vector<double> orientation_error_deg(const Pose3D& pred, const Pose3D& gt,
                                          const SkeletonTopology& topo);

struct SampleResult {
  std::string id;
  double rarity = 0.0;
  double mpjpe_initial = 0.0;
  double mpjpe_refined = 0.0;
  Pose3D refined;
};

struct RarityBucket {
  double lower = 0.0;  // smallest rarity in the bucket
  double upper = 0.0;  // largest rarity in the bucket
  int count = 0;
  double mpjpe_initial = 0.0;
  double mpjpe_refined = 0.0;
};

struct EvalReport {
  std::string corpus;  // corpus directory, relative to the report file when written by the CLI
  std::string split;
  std::string alignment = "root";  // root translation removed, no Procrustes
  double mpjpe_initial = 0.0;
  double mpjpe_refined = 0.0;
  std::vector<double> per_joint_errors;          // refined, mm
  std::vector<double> per_joint_errors_initial;  // mm
  std::vector<double> per_limb_orient_err_deg;   // refined
  std::vector<double> per_limb_orient_err_deg_initial;
  std::vector<RarityBucket> rarity_buckets;
  std::vector<SampleResult> samples;
  std::vector<std::string> joint_names;
};

// Residual predictor: receives the sample and its (modality-masked) volume.
using Predictor = std::function<FlatResidual(const SceneSample&, const PatchVolume&)>;

struct EvalOptions {
  PatchConfig patch;
  Modality modality = Modality::kFused;
  int rarity_buckets = 4;
};

// build_volume -> predictor -> apply_residual for every sample in `split`,
// then ordered aggregation. Rarity is measured against the training split.
EvalReport evaluate(const Corpus& corpus, const std::string& split,
                    const Predictor& predictor, const EvalOptions& options);

EvalReport evaluate(const Corpus& corpus, const std::string& split,
                    const Checkpoint& ckpt, int rarity_buckets = 4);

struct RefinedPose {
  std::string id;
  Pose3D pose;
};

// initial + reconstructed predicted residual for every sample of `split`, in
// manifest order.
std::vector<RefinedPose> refine_split(const Corpus& corpus, const std::string& split,
                                      const Checkpoint& ckpt);

// Splits results into `bucket_count` rarity-quantile buckets by rank.
std::vector<RarityBucket> rarity_buckets(const std::vector<SampleResult>& samples,
                                         int bucket_count);

// Two-panel skeleton overlay (camera view and a side view rotated 90 degrees
// about the vertical axis): ground truth white, initial blue, refined red.
// Initial and refined poses are drawn root-aligned to the ground truth.
Image render_overlay(const Pose3D& gt, const Pose3D& initial, const Pose3D& refined,
                     const SkeletonTopology& topo, double focal = 1100.0, int panel = 256);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
std::string format_report_table(const EvalReport& report);

}  // namespace poserefine
