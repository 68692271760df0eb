// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "poserefine/skeleton.hpp"

namespace poserefine {

// (N-1) x 3 limb displacements divided by the per-limb mean length.
struct OrientationSet {
  Points3 vectors;

  int limb_count() const { return static_cast<int>(vectors.rows()); }
};

// Row-major flattening of an OrientationSet: limb-major, (x, y, z) innermost.
struct FlatResidual {
  Eigen::VectorXd values;

  Eigen::Index size() const { return values.size(); }
};

FlatResidual flatten(const OrientationSet& orient);
OrientationSet unflatten(const FlatResidual& flat);

// Limb displacements (child minus parent) in canonical limb order, mm.
Points3 limb_displacements(const Pose3D& pose, const SkeletonTopology& topo);

OrientationSet encode(const Pose3D& pose, const BoneStats& stats,
                      const SkeletonTopology& topo);

// Exact inverse of encode's normalization: displacement[k] = v[k] * len[k].
Points3 unnormalize(const OrientationSet& orient, const BoneStats& stats);

// Walks the tree parent-before-child: root = root_position, each child is its
// parent plus the limb displacement.
Pose3D reconstruct(const Points3& displacements, const Eigen::RowVector3d& root_position,
                   const SkeletonTopology& topo);

// initial + reconstruct(unnormalize(delta), 0). The root joint of the result
// equals the root of `initial` exactly.
Pose3D apply_residual(const Pose3D& initial, const FlatResidual& delta,
                      const BoneStats& stats, const SkeletonTopology& topo);

// flatten(encode(gt) - encode(initial)): the regression target.
FlatResidual residual_target(const Pose3D& gt, const Pose3D& initial,
                             const BoneStats& stats, const SkeletonTopology& topo);

}  // namespace poserefine
