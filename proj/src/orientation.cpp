// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/orientation.hpp"

#include <string>

#include "poserefine/error.hpp"

namespace poserefine {

FlatResidual flatten(const OrientationSet& orient) {
  FlatResidual flat;
  flat.values = Eigen::Map<const Eigen::VectorXd>(orient.vectors.data(),
                                                  orient.vectors.size());
  return flat;
}

OrientationSet unflatten(const FlatResidual& flat) {
  if (flat.size() % 3 != 0) {
    throw DataError("flat residual length " + std::to_string(flat.size()) +
                    " is not a multiple of 3");
  }
  OrientationSet orient;
  orient.vectors = Eigen::Map<const Points3>(flat.values.data(), flat.size() / 3, 3);
  return orient;
}

Points3 limb_displacements(const Pose3D& pose, const SkeletonTopology& topo) {
  Points3 disp(topo.limb_count(), 3);
  for (int k = 0; k < topo.limb_count(); ++k) {
    const Limb& limb = topo.limbs()[k];
    disp.row(k) = pose.positions.row(limb.child) - pose.positions.row(limb.parent);
  }
  return disp;
}

OrientationSet encode(const Pose3D& pose, const BoneStats& stats,
                      const SkeletonTopology& topo) {
  check_pose(pose, topo);
  check_stats(stats, topo);
  OrientationSet orient;
  orient.vectors = limb_displacements(pose, topo);
  for (int k = 0; k < topo.limb_count(); ++k) {
    orient.vectors.row(k) /= stats.mean_length[k];
  }
  return orient;
}

Points3 unnormalize(const OrientationSet& orient, const BoneStats& stats) {
  if (static_cast<size_t>(orient.limb_count()) != stats.mean_length.size()) {
    throw DataError("unnormalize: orientation set and bone stats disagree in length");
  }
  Points3 disp = orient.vectors;
  for (int k = 0; k < orient.limb_count(); ++k) {
    if (!(stats.mean_length[k] > 0.0)) {
      throw DataError("unnormalize: bone stat must be strictly positive");
    }
    disp.row(k) *= stats.mean_length[k];
  }
  return disp;
}

Pose3D reconstruct(const Points3& displacements, const Eigen::RowVector3d& root_position,
                   const SkeletonTopology& topo) {
  if (displacements.rows() != topo.limb_count()) {
    throw DataError("reconstruct: expected " + std::to_string(topo.limb_count()) +
                    " displacements");
  }
  Pose3D pose;
  pose.positions.resize(topo.joint_count(), 3);
  pose.positions.row(topo.root()) = root_position;
  for (int k : topo.limb_visit_order()) {
    const Limb& limb = topo.limbs()[k];
    pose.positions.row(limb.child) =
        pose.positions.row(limb.parent) + displacements.row(k);
  }
  return pose;
}

Pose3D apply_residual(const Pose3D& initial, const FlatResidual& delta,
                      const BoneStats& stats, const SkeletonTopology& topo) {
  if (delta.size() != 3 * topo.limb_count()) {
    throw DataError("apply_residual: residual length " + std::to_string(delta.size()) +
                    " != " + std::to_string(3 * topo.limb_count()));
  }
  check_pose(initial, topo);
  const Pose3D residual =
      reconstruct(unnormalize(unflatten(delta), stats), Eigen::RowVector3d::Zero(), topo);
  Pose3D out = initial;
  out.positions += residual.positions;
  return out;
}

FlatResidual residual_target(const Pose3D& gt, const Pose3D& initial,
                             const BoneStats& stats, const SkeletonTopology& topo) {
  OrientationSet diff = encode(gt, stats, topo);
  diff.vectors -= encode(initial, stats, topo).vectors;
  return flatten(diff);
}

}  // namespace poserefine
