// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "poserefine/skeleton.hpp"

namespace poserefine::testing {

// Random pose with limb lengths in [80, 450] mm and unconstrained directions.
// Deliberately independent of the synth module.
inline Pose3D random_pose(std::mt19937_64& rng, const SkeletonTopology& topo) {
  std::uniform_real_distribution<double> pos(-500.0, 500.0);
  std::uniform_real_distribution<double> len(80.0, 450.0);
  std::normal_distribution<double> g(0.0, 1.0);
  Pose3D p{Points3::Zero(topo.joint_count(), 3)};
  p.positions.row(topo.root()) << pos(rng), pos(rng), 3000.0 + pos(rng);
  for (int k : topo.limb_visit_order()) {
    const Limb& l = topo.limbs()[k];
    Eigen::RowVector3d d(g(rng), g(rng), g(rng));
    p.positions.row(l.child) = p.positions.row(l.parent) + len(rng) * d.normalized();
  }
  return p;
}

// Root -> a -> b chain plus a second branch root -> c -> d.
inline SkeletonTopology small_topology() {
  return SkeletonTopology({"root", "a", "b", "c", "d"}, {-1, 0, 1, 0, 3},
                          {{0, 1}, {1, 2}, {0, 3}, {3, 4}});
}

inline double max_rel_error(const Points3& a, const Points3& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("poserefine_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace poserefine::testing
