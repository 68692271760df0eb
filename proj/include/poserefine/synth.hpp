// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "poserefine/image.hpp"
#include "poserefine/orientation.hpp"
#include "poserefine/patching.hpp"
#include "poserefine/skeleton.hpp"
#include "poserefine/store.hpp"

namespace poserefine {

using Rng = std::mt19937_64;

// Independent stream for sample `index` of a run seeded with `seed`.
Rng stream_rng(std::uint64_t seed, std::uint64_t index);

struct CameraModel {
  double focal = 400.0;  // px
  Eigen::Vector2d principal{128.0, 128.0};
  int width = 256;
  int height = 256;
};

enum class BodyRegion { kTorso, kLegs, kSkin };

// Where sampled poses live: per-limb rest direction (camera frame, y down)
// and cone half-angle, plus the root position.
struct PosePrior {
  std::vector<Eigen::Vector3d> rest_direction;  // unit, canonical limb order
  std::vector<double> cone_deg;
  std::vector<BodyRegion> region;  // clothing region used by the RGB renderer
  std::vector<double> limb_length_mm;
  Eigen::Vector3d root_position{0.0, 0.0, 4000.0};
};

PosePrior default_pose_prior(const SkeletonTopology& topo);

// Root at prior.root_position; each child at parent + length * u with u drawn
// uniformly from the cone around the limb's rest direction.
Pose3D sample_pose(Rng& rng, std::span<const double> limb_lengths,
                   const SkeletonTopology& topo, const PosePrior& prior);

// The pose with every limb along its rest direction.
Pose3D rest_pose(std::span<const double> limb_lengths, const SkeletonTopology& topo,
                 const PosePrior& prior);

// Pinhole: u = f x / z + cx, v = f y / z + cy. Throws DataError on z <= 0.
Keypoints2D project(const Pose3D& pose, const CameraModel& cam);

struct RenderConfig {
  double limb_thickness_px = 3.0;
  double rgb_noise = 0.08;      // per-pixel Gaussian std
  double contrast = 0.7;        // blend weight of limb appearance vs. mid-gray
  double depth_shading = 0.6;  // brightness change per 300 mm of depth
};

struct SceneRender {
  Image rgb;
  Image seg;
  std::vector<Mask> masks;       // per limb, before occlusion
  std::vector<int> depth_order;  // farthest to nearest
};

// Pixels whose center lies within limb_thickness_px of the projected segment.
Mask limb_mask(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double thickness,
               int width, int height);

// Segmentation: palette colors painted far-to-near by mean limb depth.
// RGB: clothing colors shaded by depth plus texture and noise, same occlusion.
SceneRender render_scene(const Pose3D& pose, const CameraModel& cam,
                         const SegPalette& palette, const SkeletonTopology& topo,
                         const PosePrior& prior, const RenderConfig& cfg, Rng& rng);

struct PerturbConfig {
  double orient_noise_deg = 8.0;   // std of each rotation-vector component
  double length_noise_frac = 0.02;
  double root_noise_mm = 30.0;     // std per axis
  // Fraction by which every limb direction is pulled toward the prior's rest
  // direction, modelling an estimator biased toward frequently seen poses.
  double prior_pull = 0.75;
};

// Pulls, rotates and rescales each limb displacement, rebuilds the pose
// along the tree from the ground-truth root, and shifts the root. With every
// scale at zero the result equals `gt` exactly.
Pose3D perturb_initial(const Pose3D& gt, const PerturbConfig& cfg,
                       const SkeletonTopology& topo, const PosePrior& prior, Rng& rng);

// Root-aligned MPJPE to the nearest reference pose.
double rarity_score(const Pose3D& pose, std::span<const Pose3D> reference,
                    const SkeletonTopology& topo);

struct GeneratorConfig {
  CameraModel camera;
  PosePrior prior;  // empty: default_pose_prior(default_topology())
  RenderConfig render;
  PerturbConfig perturb;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  double subject_scale_jitter = 0.0;  // limb lengths scaled by U(1-j, 1+j)
};

nlohmann::json generator_config_to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

struct SceneSample {
  std::string id;
  std::string split;
  Pose3D gt_pose;
  Pose3D initial_pose;
  Keypoints2D keypoints;
  Image rgb;
  Image seg;
  double rarity = 0.0;
};

struct SplitSizes {
  int train = 0, val = 0, test = 0;
};

// floor(n * fraction) for val and test, remainder to train.
SplitSizes split_sizes(int n, double val_fraction, double test_fraction);

// Generates one sample (without rarity) from its own stream.
SceneSample generate_sample(std::uint64_t seed, int index, const GeneratorConfig& cfg,
                            const SkeletonTopology& topo, const PosePrior& prior,
                            const SegPalette& palette);

// Writes manifest.json, topology.json, palette.json, bone_stats.json and
// samples/<id>/{gt,init,kp2d}.json + {rgb,seg}.png under `out_dir`.
Manifest generate_corpus(int n, std::uint64_t seed, const GeneratorConfig& cfg,
                         const fs::path& out_dir);

// A loaded corpus: manifest plus the shared artifacts it references.
struct Corpus {
  fs::path root;
  Manifest manifest;
  SkeletonTopology topology = default_topology();
  SegPalette palette;
  BoneStats stats;
  GeneratorConfig generator;

  std::vector<const ManifestEntry*> entries(const std::string& split) const;
};

Corpus load_corpus(const fs::path& dir);
SceneSample load_sample(const Corpus& corpus, const ManifestEntry& entry,
                        bool with_images = true);

}  // namespace poserefine
