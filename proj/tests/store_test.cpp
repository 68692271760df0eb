// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <limits>
#include <random>
#include <string>

#include "poserefine/error.hpp"
#include "poserefine/store.hpp"
#include "poserefine/synth.hpp"
#include "test_util.hpp"

namespace poserefine {
namespace {

using nlohmann::json;
using testing::random_pose;
using testing::TempDir;

bool bit_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Json, ShortestRoundTripFloats) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  json arr = json::array();
  std::vector<double> values = {0.1, 1.0 / 3.0, std::numeric_limits<double>::min(), 5e-324,
                                std::numeric_limits<double>::max()};
  for (int i = 0; i < 200; ++i) values.push_back(u(rng));
  for (double v : values) arr.push_back(v);
  const json back = json::parse(dump_json(arr));
  for (size_t i = 0; i < values.size(); ++i) EXPECT_TRUE(bit_equal(back[i].get<double>(), values[i]));
  EXPECT_NE(dump_json(json(0.1)).find("0.1"), std::string::npos);
}

TEST(AtomicWrite, ReplacesContentAndLeavesNoTemp) {
  TempDir dir;
  const fs::path p = dir.path() / "f.txt";
  atomic_write(p, "first");
  atomic_write(p, "second");
  EXPECT_EQ(read_file(p), "second");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1);
  EXPECT_THROW(read_file(dir.path() / "absent"), DataError);
}

TEST(Topology, RoundTrip) {
  TempDir dir;
  for (const SkeletonTopology& topo : {default_topology(), testing::small_topology()}) {
    save_topology(dir.path() / "t.json", topo);
    EXPECT_EQ(load_topology(dir.path() / "t.json"), topo);
  }
}

TEST(Topology, InvalidStructureRejected) {
  json j = topology_to_json(testing::small_topology());
  j["parent"] = {-1, 0, 1, 0, 7};
  EXPECT_THROW(topology_from_json(j), DataError);
  json k = topology_to_json(testing::small_topology());
  k["limbs"][0] = json::array({0});
  EXPECT_THROW(topology_from_json(k), DataError);
}

TEST(Pose, HundredRandomPosesBitExact) {
  TempDir dir;
  std::mt19937_64 rng(2);
  const SkeletonTopology topo = default_topology();
  for (int i = 0; i < 100; ++i) {
    const Pose3D p = random_pose(rng, topo);
    save_pose(dir.path() / "p.json", p);
    const Pose3D q = load_pose(dir.path() / "p.json");
    ASSERT_EQ(q.positions.rows(), p.positions.rows());
    for (Eigen::Index r = 0; r < p.positions.rows(); ++r) {
      for (int c = 0; c < 3; ++c) ASSERT_TRUE(bit_equal(q.positions(r, c), p.positions(r, c)));
    }
  }
}

TEST(Pose, SchemaChecks) {
  const Pose3D p{Points3::Ones(2, 3)};
  json wrong_unit = pose_to_json(p);
  wrong_unit["unit"] = "m";
  EXPECT_THROW(pose_from_json(wrong_unit), DataError);
  json wrong_version = pose_to_json(p);
  wrong_version["version"] = 2;
  EXPECT_THROW(pose_from_json(wrong_version), DataError);
  json no_version = pose_to_json(p);
  no_version.erase("version");
  EXPECT_THROW(pose_from_json(no_version), DataError);
  json short_row = pose_to_json(p);
  short_row["positions"][1] = {1.0, 2.0};
  EXPECT_THROW(pose_from_json(short_row), DataError);
  json text = pose_to_json(p);
  text["positions"][0][0] = "x";
  EXPECT_THROW(pose_from_json(text), DataError);
}

TEST(Pose, InvalidJsonFileRejected) {
  TempDir dir;
  atomic_write(dir.path() / "bad.json", "{ not json");
  EXPECT_THROW(load_pose(dir.path() / "bad.json"), DataError);
}

TEST(Keypoints, RoundTrip) {
  TempDir dir;
  Keypoints2D k{Points2(3, 2)};
  k.points << 0.5, 1.25, 100.0 / 3.0, -4.0, 255.9, 0.0;
  save_keypoints(dir.path() / "k.json", k);
  EXPECT_EQ(load_keypoints(dir.path() / "k.json").points, k.points);
  json wrong = keypoints_to_json(k);
  wrong["unit"] = "mm";
  EXPECT_THROW(keypoints_from_json(wrong), DataError);
}

TEST(Stats, RoundTripAndPositivity) {
  TempDir dir;
  const BoneStats s{{120.5, 1.0 / 7.0, 450.0}};
  save_stats(dir.path() / "s.json", s);
  EXPECT_EQ(load_stats(dir.path() / "s.json").mean_length, s.mean_length);
  EXPECT_THROW(stats_from_json(stats_to_json(BoneStats{{1.0, 0.0}})), DataError);
  EXPECT_THROW(stats_from_json(stats_to_json(BoneStats{{-3.0}})), DataError);
}

TEST(Palette, RoundTrip) {
  TempDir dir;
  const SegPalette p = default_palette(16);
  save_palette(dir.path() / "p.json", p);
  const SegPalette q = load_palette(dir.path() / "p.json");
  EXPECT_EQ(q.limb_color, p.limb_color);
  EXPECT_EQ(q.background_color, p.background_color);
  json bad = palette_to_json(p);
  bad["limb_colors"][0] = {1.0, 0.0};
  EXPECT_THROW(palette_from_json(bad), DataError);
  json duplicate = palette_to_json(p);
  duplicate["limb_colors"][1] = duplicate["limb_colors"][0];
  EXPECT_THROW(palette_from_json(duplicate), DataError);
}

TEST(DataDir, ShippedFilesMatchDefaults) {
  const fs::path data = POSEREFINE_DATA_DIR;
  EXPECT_EQ(load_topology(data / "topology.json"), default_topology());
  const SegPalette p = load_palette(data / "palette.json");
  EXPECT_EQ(p.limb_color, default_palette(16).limb_color);
  EXPECT_EQ(p.background_color, default_palette(16).background_color);
}

TEST(Configs, RegressorAndPatchRoundTrip) {
  RegressorConfig r = default_regressor_config(16, 24);
  r.pooling = Pooling::kGlobalAverage;
  r.fc_widths = {32, 16};
  r.seed = 99;
  r.modality = Modality::kSegOnly;
  EXPECT_EQ(regressor_config_from_json(regressor_config_to_json(r)), r);
  PatchConfig p;
  p.min_side = 20.0;
  p.scale = 1.5;
  p.out_res = 24;
  const PatchConfig q = patch_config_from_json(patch_config_to_json(p));
  EXPECT_EQ(q.min_side, p.min_side);
  EXPECT_EQ(q.scale, p.scale);
  EXPECT_EQ(q.out_res, p.out_res);
}

TEST(Png, EightBitRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 255);
  Image img(13, 7);
  for (double& v : img.data()) v = u(rng) / 255.0;
  const Image back = decode_png(encode_png(img));
  EXPECT_EQ(back, img);
  EXPECT_THROW(decode_png("not a png"), DataError);
}

TEST(Png, FileRoundTrip) {
  TempDir dir;
  Image img(4, 4, {1.0, 0.0, 0.2});
  write_png(dir.path() / "x.png", img);
  const Image back = read_png(dir.path() / "x.png");
  EXPECT_EQ(back.pixel(2, 3), img.pixel(2, 3));
}

Checkpoint random_checkpoint(std::uint64_t seed) {
  Checkpoint c;
  c.regressor = default_regressor_config(16, 16);
  c.regressor.seed = seed;
  c.patch.out_res = 16;
  c.params = init_params(c.regressor);
  return c;
}

TEST(Checkpoint, BitExactRoundTrip) {
  TempDir dir;
  const Checkpoint c = random_checkpoint(5);
  save_checkpoint(dir.path() / "c.bin", c);
  const Checkpoint d = load_checkpoint(dir.path() / "c.bin");
  EXPECT_EQ(d.regressor, c.regressor);
  EXPECT_EQ(d.patch.out_res, c.patch.out_res);
  ASSERT_EQ(d.params.values.size(), c.params.values.size());
  EXPECT_EQ(std::memcmp(d.params.values.data(), c.params.values.data(),
                        c.params.values.size() * sizeof(double)),
            0);
  EXPECT_EQ(encode_checkpoint(d), encode_checkpoint(c));
}

TEST(Checkpoint, HeaderLayout) {
  const std::string bytes = encode_checkpoint(random_checkpoint(1));
  EXPECT_EQ(bytes.substr(0, 4), "PRFK");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  EXPECT_EQ(version, kCheckpointVersion);
}

TEST(Checkpoint, CorruptionRejected) {
  const std::string good = encode_checkpoint(random_checkpoint(2));
  std::string magic = good;
  magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(magic), DataError);
  std::string version = good;
  version[4] = 9;
  EXPECT_THROW(decode_checkpoint(version), DataError);
  EXPECT_THROW(decode_checkpoint(good.substr(0, good.size() - 8)), DataError);
  EXPECT_THROW(decode_checkpoint(good.substr(0, 10)), DataError);
  EXPECT_THROW(decode_checkpoint(good + "extra"), DataError);
}

TEST(Checkpoint, NonFiniteParamsRejectedOnSave) {
  Checkpoint c = random_checkpoint(3);
  c.params.values[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(encode_checkpoint(c), DataError);
}

TEST(Checkpoint, ErrorNamesPath) {
  TempDir dir;
  atomic_write(dir.path() / "junk.bin", "junk");
  try {
    load_checkpoint(dir.path() / "junk.bin");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("junk.bin"), std::string::npos);
  }
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override { generate_corpus(6, 3, GeneratorConfig{}, dir_.path()); }
  TempDir dir_;
};

TEST_F(ManifestTest, RoundTrip) {
  const Manifest m = load_manifest(dir_.path());
  EXPECT_EQ(m.samples.size(), 6u);
  EXPECT_EQ(m.generator_seed, 3u);
  EXPECT_EQ(m.config_hash, hex64(fnv1a64(dump_json(m.config))));
  EXPECT_EQ(dump_json(manifest_to_json(manifest_from_json(manifest_to_json(m)))),
            dump_json(manifest_to_json(m)));
}

TEST_F(ManifestTest, MissingFileNamed) {
  const Manifest m = load_manifest(dir_.path());
  fs::remove(dir_.path() / m.samples[2].seg);
  try {
    load_manifest(dir_.path());
    FAIL();
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("missing file"), std::string::npos);
    EXPECT_NE(what.find(m.samples[2].seg), std::string::npos);
  }
}

TEST_F(ManifestTest, TamperedConfigFailsChecksum) {
  json j = load_json(dir_.path() / "manifest.json");
  j["config"]["val_fraction"] = 0.5;
  save_json(dir_.path() / "manifest.json", j);
  try {
    load_manifest(dir_.path());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum failure"), std::string::npos);
  }
}

TEST_F(ManifestTest, UnsupportedVersionRejected) {
  json j = load_json(dir_.path() / "manifest.json");
  j["version"] = 7;
  save_json(dir_.path() / "manifest.json", j);
  EXPECT_THROW(load_manifest(dir_.path()), DataError);
}

TEST_F(ManifestTest, UnknownSplitRejected) {
  json j = load_json(dir_.path() / "manifest.json");
  j["samples"][0]["split"] = "dev";
  save_json(dir_.path() / "manifest.json", j);
  EXPECT_THROW(load_manifest(dir_.path()), DataError);
}

TEST(Manifest, MissingManifestRejected) {
  TempDir dir;
  EXPECT_THROW(load_manifest(dir.path()), DataError);
}

}  // namespace
}  // namespace poserefine
