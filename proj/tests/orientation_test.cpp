// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "poserefine/error.hpp"
#include "poserefine/orientation.hpp"
#include "test_util.hpp"

namespace poserefine {
namespace {

using testing::max_rel_error;
using testing::random_pose;

BoneStats random_stats(std::mt19937_64& rng, int limbs) {
  std::uniform_real_distribution<double> u(50.0, 500.0);
  BoneStats s;
  for (int k = 0; k < limbs; ++k) s.mean_length.push_back(u(rng));
  return s;
}

// Two-limb chain root -> a -> b.
SkeletonTopology chain() { return SkeletonTopology({"r", "a", "b"}, {-1, 0, 1}, {{0, 1}, {1, 2}}); }

TEST(Encode, DividesByMeanLength) {
  const SkeletonTopology topo = chain();
  Pose3D p{Points3::Zero(3, 3)};
  p.positions << 0, 0, 0, 0, 0, 2, 3, 4, 2;
  const OrientationSet o = encode(p, BoneStats{{2.0, 5.0}}, topo);
  EXPECT_EQ(o.vectors.row(0), Eigen::RowVector3d(0, 0, 1));
  EXPECT_DOUBLE_EQ(o.vectors(1, 0), 0.6);
  EXPECT_DOUBLE_EQ(o.vectors(1, 1), 0.8);
  EXPECT_DOUBLE_EQ(o.vectors(1, 2), 0.0);
}

TEST(Encode, NonPositiveStatRejected) {
  const SkeletonTopology topo = chain();
  const Pose3D p{Points3::Ones(3, 3)};
  EXPECT_THROW(encode(p, BoneStats{{2.0, 0.0}}, topo), DataError);
  EXPECT_THROW(encode(p, BoneStats{{2.0, -1.0}}, topo), DataError);
  EXPECT_THROW(encode(p, BoneStats{{2.0}}, topo), DataError);
}

TEST(Unnormalize, ScalesByMeanLength) {
  OrientationSet o{Points3::Zero(1, 3)};
  o.vectors << 0, 0, 1;
  const Points3 d = unnormalize(o, BoneStats{{2.0}});
  EXPECT_EQ(d.row(0), Eigen::RowVector3d(0, 0, 2));
}

TEST(Unnormalize, ZeroSetGivesZeroDisplacements) {
  const OrientationSet o{Points3::Zero(16, 3)};
  std::mt19937_64 rng(1);
  EXPECT_TRUE(unnormalize(o, random_stats(rng, 16)).isZero(0.0));
}

TEST(UnnormalizeProperty, InvertsEncode) {
  std::mt19937_64 rng(2);
  const SkeletonTopology topo = default_topology();
  for (int i = 0; i < 100; ++i) {
    const Pose3D p = random_pose(rng, topo);
    const BoneStats s = random_stats(rng, topo.limb_count());
    const Points3 raw = limb_displacements(p, topo);
    EXPECT_LT(max_rel_error(unnormalize(encode(p, s, topo), s), raw), 1e-14);
  }
}

TEST(Reconstruct, ZeroDisplacementsCollapseToRoot) {
  const SkeletonTopology topo = default_topology();
  const Eigen::RowVector3d root(1, -2, 3);
  const Pose3D p = reconstruct(Points3::Zero(16, 3), root, topo);
  for (int j = 0; j < 17; ++j) EXPECT_EQ(p.positions.row(j), root);
}

TEST(Reconstruct, ChainSumsDisplacements) {
  Points3 d(2, 3);
  d << 1, 0, 0, 0, 1, 0;
  const Pose3D p = reconstruct(d, Eigen::RowVector3d::Zero(), chain());
  EXPECT_EQ(p.positions.row(1), Eigen::RowVector3d(1, 0, 0));
  EXPECT_EQ(p.positions.row(2), Eigen::RowVector3d(1, 1, 0));
}

TEST(Reconstruct, WrongRowCountRejected) {
  EXPECT_THROW(reconstruct(Points3::Zero(3, 3), Eigen::RowVector3d::Zero(), chain()), DataError);
}

// Limbs listed child-before-parent in canonical order still reconstruct.
TEST(Reconstruct, HonorsTreeOrderNotListOrder) {
  const SkeletonTopology topo({"r", "a", "b"}, {-1, 0, 1}, {{1, 2}, {0, 1}});
  Points3 d(2, 3);
  d << 0, 1, 0, 1, 0, 0;
  const Pose3D p = reconstruct(d, Eigen::RowVector3d::Zero(), topo);
  EXPECT_EQ(p.positions.row(2), Eigen::RowVector3d(1, 1, 0));
}

TEST(ReconstructProperty, RoundTripWithOwnRoot) {
  std::mt19937_64 rng(4);
  const SkeletonTopology topo = default_topology();
  for (int i = 0; i < 200; ++i) {
    const Pose3D p = random_pose(rng, topo);
    const Pose3D q = reconstruct(limb_displacements(p, topo), p.positions.row(0), topo);
    EXPECT_LT(max_rel_error(q.positions, p.positions), 1e-12);
  }
}

TEST(RoundTrip, EncodeUnnormalizeReconstructThousandPoses) {
  std::mt19937_64 rng(5);
  const SkeletonTopology topo = default_topology();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Pose3D p = random_pose(rng, topo);
    const BoneStats s = random_stats(rng, topo.limb_count());
    const Pose3D q = reconstruct(unnormalize(encode(p, s, topo), s), Eigen::RowVector3d::Zero(), topo);
    worst = std::max(worst, max_rel_error(q.positions, root_relative(p, topo).positions));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Flatten, LimbMajorXyzInnermost) {
  OrientationSet o{Points3(2, 3)};
  o.vectors << 1, 2, 3, 4, 5, 6;
  const FlatResidual f = flatten(o);
  ASSERT_EQ(f.size(), 6);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(f.values[i], i + 1);
  EXPECT_EQ(unflatten(f).vectors, o.vectors);
}

TEST(Flatten, LengthNotMultipleOfThreeRejected) {
  EXPECT_THROW(unflatten(FlatResidual{Eigen::VectorXd::Zero(7)}), DataError);
}

TEST(ApplyResidual, ZeroDeltaIsBitExactIdentity) {
  std::mt19937_64 rng(6);
  const SkeletonTopology topo = default_topology();
  for (int i = 0; i < 50; ++i) {
    const Pose3D p = random_pose(rng, topo);
    const BoneStats s = random_stats(rng, 16);
    EXPECT_EQ(apply_residual(p, FlatResidual{Eigen::VectorXd::Zero(48)}, s, topo), p);
  }
}

TEST(ApplyResidual, LengthMismatchRejected) {
  std::mt19937_64 rng(7);
  const SkeletonTopology topo = default_topology();
  const Pose3D p = random_pose(rng, topo);
  EXPECT_THROW(apply_residual(p, FlatResidual{Eigen::VectorXd::Zero(47)},
                              random_stats(rng, 16), topo),
               DataError);
}

TEST(ApplyResidual, RootStaysPinned) {
  std::mt19937_64 rng(8);
  const SkeletonTopology topo = default_topology();
  const Pose3D p = random_pose(rng, topo);
  const FlatResidual delta{Eigen::VectorXd::Random(48)};
  const Pose3D q = apply_residual(p, delta, random_stats(rng, 16), topo);
  EXPECT_EQ(q.positions.row(0), p.positions.row(0));
}

TEST(ApplyResidual, TargetRecoversGroundTruth) {
  std::mt19937_64 rng(9);
  const SkeletonTopology topo = default_topology();
  for (int i = 0; i < 200; ++i) {
    const Pose3D gt = random_pose(rng, topo);
    const Pose3D init = random_pose(rng, topo);
    const BoneStats s = random_stats(rng, 16);
    const Pose3D out = apply_residual(init, residual_target(gt, init, s, topo), s, topo);
    EXPECT_LT(max_rel_error(root_relative(out, topo).positions, root_relative(gt, topo).positions),
              1e-9);
  }
}

TEST(ApplyResidualProperty, DeltaThenNegativeDeltaRestores) {
  std::mt19937_64 rng(10);
  const SkeletonTopology topo = default_topology();
  for (int i = 0; i < 100; ++i) {
    const Pose3D p = random_pose(rng, topo);
    const BoneStats s = random_stats(rng, 16);
    const FlatResidual d{Eigen::VectorXd::Random(48)};
    const FlatResidual neg{-d.values};
    const Pose3D back = apply_residual(apply_residual(p, d, s, topo), neg, s, topo);
    EXPECT_LT(max_rel_error(back.positions, p.positions), 1e-9);
  }
}

TEST(ApplyResidualProperty, AffineInDelta) {
  std::mt19937_64 rng(11);
  const SkeletonTopology topo = default_topology();
  for (int i = 0; i < 100; ++i) {
    const Pose3D p = random_pose(rng, topo);
    const BoneStats s = random_stats(rng, 16);
    const FlatResidual a{Eigen::VectorXd::Random(48)}, b{Eigen::VectorXd::Random(48)};
    const Pose3D joint = apply_residual(p, FlatResidual{a.values + b.values}, s, topo);
    const Pose3D chained = apply_residual(apply_residual(p, a, s, topo), b, s, topo);
    EXPECT_LT(max_rel_error(joint.positions, chained.positions), 1e-12);
  }
}

TEST(ResidualTarget, IdenticalPosesGiveZero) {
  std::mt19937_64 rng(12);
  const SkeletonTopology topo = default_topology();
  const Pose3D p = random_pose(rng, topo);
  const FlatResidual t = residual_target(p, p, random_stats(rng, 16), topo);
  EXPECT_EQ(t.size(), 48);
  EXPECT_TRUE(t.values.isZero(0.0));
}

TEST(ResidualTarget, OneLimbDisplacedByMeanLengthAlongZ) {
  const SkeletonTopology topo = default_topology();
  std::mt19937_64 rng(13);
  const BoneStats s = random_stats(rng, 16);
  const Pose3D init = random_pose(rng, topo);
  // Wrist is a leaf: moving it changes exactly one limb.
  const int wrist = 16;
  const int k = topo.limb_of_child(wrist);
  Pose3D gt = init;
  gt.positions(wrist, 2) += s.mean_length[k];
  const FlatResidual t = residual_target(gt, init, s, topo);
  for (int i = 0; i < 48; ++i) {
    const double expected = (i == 3 * k + 2) ? 1.0 : 0.0;
    EXPECT_NEAR(t.values[i], expected, 1e-12) << i;
  }
}

// Scaling every pose and the corpus stats by s leaves the orientation set
// unchanged.
TEST(EncodeProperty, ScaleConsistency) {
  std::mt19937_64 rng(14);
  const SkeletonTopology topo = default_topology();
  std::vector<Pose3D> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(random_pose(rng, topo));
  const BoneStats base = compute_bone_stats(corpus, topo);
  for (double scale : {0.5, 1.7, 3.0}) {
    std::vector<Pose3D> scaled;
    for (const Pose3D& p : corpus) scaled.push_back(Pose3D{p.positions * scale});
    const BoneStats ss = compute_bone_stats(scaled, topo);
    for (size_t i = 0; i < corpus.size(); ++i) {
      const Points3 a = encode(corpus[i], base, topo).vectors;
      const Points3 b = encode(scaled[i], ss, topo).vectors;
      EXPECT_LT(max_rel_error(b, a), 1e-13);
    }
  }
}

}  // namespace
}  // namespace poserefine
