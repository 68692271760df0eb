// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "poserefine/image.hpp"
#include "poserefine/patching.hpp"
#include "poserefine/regressor.hpp"
#include "poserefine/skeleton.hpp"

namespace poserefine {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'P', 'R', 'F', 'K'};

// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

// 64-bit FNV-1a, used for manifest config hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// JSON documents are written with shortest round-trip float formatting, so
// every double reloads to the identical value.
std::string dump_json(const nlohmann::json& j);
nlohmann::json load_json(const fs::path& path);
void save_json(const fs::path& path, const nlohmann::json& j);

nlohmann::json topology_to_json(const SkeletonTopology& topo);
SkeletonTopology topology_from_json(const nlohmann::json& j);
void save_topology(const fs::path& path, const SkeletonTopology& topo);
SkeletonTopology load_topology(const fs::path& path);

nlohmann::json pose_to_json(const Pose3D& pose);
Pose3D pose_from_json(const nlohmann::json& j);
void save_pose(const fs::path& path, const Pose3D& pose);
Pose3D load_pose(const fs::path& path);

nlohmann::json keypoints_to_json(const Keypoints2D& kps);
Keypoints2D keypoints_from_json(const nlohmann::json& j);
void save_keypoints(const fs::path& path, const Keypoints2D& kps);
Keypoints2D load_keypoints(const fs::path& path);

nlohmann::json stats_to_json(const BoneStats& stats);
BoneStats stats_from_json(const nlohmann::json& j);
void save_stats(const fs::path& path, const BoneStats& stats);
BoneStats load_stats(const fs::path& path);

nlohmann::json palette_to_json(const SegPalette& palette);
SegPalette palette_from_json(const nlohmann::json& j);
void save_palette(const fs::path& path, const SegPalette& palette);
SegPalette load_palette(const fs::path& path);

nlohmann::json regressor_config_to_json(const RegressorConfig& cfg);
RegressorConfig regressor_config_from_json(const nlohmann::json& j);
nlohmann::json patch_config_to_json(const PatchConfig& cfg);
PatchConfig patch_config_from_json(const nlohmann::json& j);

// 8-bit RGB PNG; values map linearly between [0, 1] and [0, 255].
std::string encode_png(const Image& img);
Image decode_png(std::string_view bytes);
void write_png(const fs::path& path, const Image& img);
Image read_png(const fs::path& path);

struct Checkpoint {
  RegressorConfig regressor;
  PatchConfig patch;
  RegressorParams params;
};

// Little-endian layout: "PRFK", u32 version, u64 config-JSON length, config
// JSON bytes, u64 parameter count, float64 parameters.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& path);

struct ManifestEntry {
  std::string id;
  std::string split;  // "train" | "val" | "test"
  std::string gt, init, kp2d, rgb, seg;  // relative to the corpus root
  double rarity = 0.0;
};

struct Manifest {
  int version = kSchemaVersion;
  std::uint64_t generator_seed = 0;
  nlohmann::json config;    // generator configuration
  std::string config_hash;  // hex64(fnv1a64(dump_json(config)))
  std::string topology = "topology.json";
  std::string palette = "palette.json";
  std::string bone_stats = "bone_stats.json";
  std::vector<ManifestEntry> samples;
};

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const fs::path& corpus_dir, const Manifest& m);
// Validates schema, config hash, and that every referenced file exists.
Manifest load_manifest(const fs::path& corpus_dir);

}  // namespace poserefine
