// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

namespace poserefine {

// N x 3 joint positions, one row per joint.
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
// N x 2 pixel positions, one row per joint.
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

inline constexpr int kNoParent = -1;

struct Limb {
  int parent = kNoParent;
  int child = kNoParent;

  friend bool operator==(const Limb&, const Limb&) = default;
};

// Joint tree shared by every pose, orientation and patch quantity. Instances
// are always valid: construction goes through validate_topology.
class SkeletonTopology {
 public:
  SkeletonTopology(std::vector<std::string> joint_names, std::vector<int> parent,
                   std::vector<Limb> limbs);

  int joint_count() const { return static_cast<int>(parent_.size()); }
  int limb_count() const { return static_cast<int>(limbs_.size()); }
  int root() const { return root_; }

  const std::vector<std::string>& joint_names() const { return joint_names_; }
  const std::vector<int>& parent() const { return parent_; }
  const std::vector<Limb>& limbs() const { return limbs_; }

  // Limb indices ordered so that a limb's parent joint is placed before its
  // child joint (parent-before-child walk from the root).
  const std::vector<int>& limb_visit_order() const { return visit_order_; }

  // Index of the limb whose child is `joint`, or -1 for the root.
  int limb_of_child(int joint) const { return limb_of_child_[joint]; }

  friend bool operator==(const SkeletonTopology& a, const SkeletonTopology& b) {
    return a.joint_names_ == b.joint_names_ && a.parent_ == b.parent_ &&
           a.limbs_ == b.limbs_;
  }

 private:
  std::vector<std::string> joint_names_;
  std::vector<int> parent_;
  std::vector<Limb> limbs_;
  std::vector<int> visit_order_;
  std::vector<int> limb_of_child_;
  int root_ = 0;
};

// Checks the tree invariants and returns the canonical limb ordering.
// Throws DataError ("cycle", "multiple roots", "duplicate child", ...).
std::vector<Limb> validate_topology(std::span<const int> parent,
                                    std::span<const Limb> limbs);

// 17-joint pelvis-rooted layout (hips/legs, spine/neck/head, arms).
SkeletonTopology default_topology();

struct Pose3D {
  Points3 positions;  // millimeters

  int joint_count() const { return static_cast<int>(positions.rows()); }
  friend bool operator==(const Pose3D& a, const Pose3D& b) {
    return a.positions.rows() == b.positions.rows() && a.positions == b.positions;
  }
};

struct Keypoints2D {
  Points2 points;  // pixels

  int joint_count() const { return static_cast<int>(points.rows()); }
};

struct BoneStats {
  std::vector<double> mean_length;  // millimeters, canonical limb order
};

// Euclidean length of every limb in canonical order.
std::vector<double> limb_lengths(const Pose3D& pose, const SkeletonTopology& topo);

BoneStats compute_bone_stats(std::span<const Pose3D> poses,
                             const SkeletonTopology& topo);

Pose3D root_relative(const Pose3D& pose, const SkeletonTopology& topo);

// Throws DataError when the pose does not match the topology or holds
// non-finite values.
void check_pose(const Pose3D& pose, const SkeletonTopology& topo);
void check_stats(const BoneStats& stats, const SkeletonTopology& topo);

}  // namespace poserefine
