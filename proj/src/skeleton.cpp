// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/skeleton.hpp"

#include <cmath>
#include <string>

#include "poserefine/error.hpp"

namespace poserefine {

std::vector<Limb> validate_topology(std::span<const int> parent,
                                    std::span<const Limb> limbs) {
  const int n = static_cast<int>(parent.size());
  if (n == 0) throw DataError("topology: no joints");

  int root = kNoParent;
  for (int j = 0; j < n; ++j) {
    if (parent[j] == kNoParent) {
      if (root != kNoParent) throw DataError("topology: multiple roots");
      root = j;
    } else if (parent[j] < 0 || parent[j] >= n) {
      throw DataError("topology: parent index out of range at joint " +
                      std::to_string(j));
    }
  }
  if (root == kNoParent) throw DataError("topology: no root (cycle)");

  // Every joint must reach the root by following parents; otherwise it sits
  // on a cycle or hangs below one.
  std::vector<int> state(n, 0);  // 0 unseen, 1 on current path, 2 reaches root
  state[root] = 2;
  for (int j = 0; j < n; ++j) {
    std::vector<int> path;
    int cur = j;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = parent[cur];
    }
    if (state[cur] == 1) throw DataError("topology: cycle through joint " +
                                         std::to_string(cur));
    for (int p : path) state[p] = 2;
  }

  if (static_cast<int>(limbs.size()) != n - 1) {
    throw DataError("topology: expected " + std::to_string(n - 1) +
                    " limbs, got " + std::to_string(limbs.size()));
  }
  std::vector<bool> seen(n, false);
  for (const Limb& limb : limbs) {
    if (limb.child < 0 || limb.child >= n || limb.parent < 0 || limb.parent >= n) {
      throw DataError("topology: limb joint index out of range");
    }
    if (seen[limb.child]) {
      throw DataError("topology: duplicate child " + std::to_string(limb.child));
    }
    seen[limb.child] = true;
    if (limb.child == root) throw DataError("topology: root used as limb child");
    if (parent[limb.child] != limb.parent) {
      throw DataError("topology: limb (" + std::to_string(limb.parent) + "," +
                      std::to_string(limb.child) + ") disagrees with parent array");
    }
  }
  return {limbs.begin(), limbs.end()};
}

SkeletonTopology::SkeletonTopology(std::vector<std::string> joint_names,
                                   std::vector<int> parent, std::vector<Limb> limbs)
    : joint_names_(std::move(joint_names)), parent_(std::move(parent)) {
  limbs_ = validate_topology(parent_, limbs);
  const int n = joint_count();
  if (static_cast<int>(joint_names_.size()) != n) {
    throw DataError("topology: joint_names length does not match parent array");
  }
  for (int j = 0; j < n; ++j) {
    if (parent_[j] == kNoParent) root_ = j;
  }

  limb_of_child_.assign(n, -1);
  for (int k = 0; k < limb_count(); ++k) limb_of_child_[limbs_[k].child] = k;

  // Breadth-first from the root; ties broken by joint index so the order is
  // a pure function of the parent array.
  std::vector<std::vector<int>> children(n);
  for (int j = 0; j < n; ++j) {
    if (parent_[j] != kNoParent) children[parent_[j]].push_back(j);
  }
  std::vector<int> queue{root_};
  for (size_t head = 0; head < queue.size(); ++head) {
    for (int c : children[queue[head]]) {
      visit_order_.push_back(limb_of_child_[c]);
      queue.push_back(c);
    }
  }
}

SkeletonTopology default_topology() {
  std::vector<std::string> names = {
      "pelvis",     "right_hip",   "right_knee",  "right_ankle", "left_hip",
      "left_knee",  "left_ankle",  "spine",       "thorax",      "neck",
      "head",       "left_shoulder", "left_elbow", "left_wrist", "right_shoulder",
      "right_elbow", "right_wrist"};
  std::vector<int> parent = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
  std::vector<Limb> limbs;
  for (int j = 1; j < static_cast<int>(parent.size()); ++j) {
    limbs.push_back({parent[j], j});
  }
  return SkeletonTopology(std::move(names), std::move(parent), std::move(limbs));
}

void check_pose(const Pose3D& pose, const SkeletonTopology& topo) {
  if (pose.joint_count() != topo.joint_count()) {
    throw DataError("pose has " + std::to_string(pose.joint_count()) +
                    " joints, topology has " + std::to_string(topo.joint_count()));
  }
  if (!pose.positions.allFinite()) throw DataError("pose has non-finite values");
}

void check_stats(const BoneStats& stats, const SkeletonTopology& topo) {
  if (static_cast<int>(stats.mean_length.size()) != topo.limb_count()) {
    throw DataError("bone stats length does not match limb count");
  }
  for (double v : stats.mean_length) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DataError("bone stats entries must be finite and strictly positive");
    }
  }
}

std::vector<double> limb_lengths(const Pose3D& pose, const SkeletonTopology& topo) {
  std::vector<double> out;
  out.reserve(topo.limb_count());
  for (const Limb& limb : topo.limbs()) {
    out.push_back((pose.positions.row(limb.child) - pose.positions.row(limb.parent)).norm());
  }
  return out;
}

BoneStats compute_bone_stats(std::span<const Pose3D> poses,
                             const SkeletonTopology& topo) {
  if (poses.empty()) throw DataError("compute_bone_stats: empty pose list");
  std::vector<double> sum(topo.limb_count(), 0.0);
  for (const Pose3D& pose : poses) {
    check_pose(pose, topo);
    const std::vector<double> len = limb_lengths(pose, topo);
    for (size_t k = 0; k < len.size(); ++k) sum[k] += len[k];
  }
  BoneStats stats;
  stats.mean_length.resize(sum.size());
  for (size_t k = 0; k < sum.size(); ++k) {
    stats.mean_length[k] = sum[k] / static_cast<double>(poses.size());
    if (!(stats.mean_length[k] > 0.0)) {
      throw DataError("compute_bone_stats: limb " + std::to_string(k) +
                      " has zero length in every pose");
    }
  }
  return stats;
}

Pose3D root_relative(const Pose3D& pose, const SkeletonTopology& topo) {
  Pose3D out = pose;
  const Eigen::RowVector3d root = pose.positions.row(topo.root());
  out.positions.rowwise() -= root;
  return out;
}

}  // namespace poserefine
