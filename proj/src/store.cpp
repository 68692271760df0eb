// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/store.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "poserefine/error.hpp"

namespace poserefine {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

void atomic_write(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json load_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

void save_json(const fs::path& path, const json& j) { atomic_write(path, dump_json(j)); }

namespace {

// Runs a decoder, converting library errors into DataError with context.
template <class F>
auto schema_guard(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(what + ": schema violation: " + e.what());
  }
}

void check_version(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("version")) {
    throw DataError(what + ": missing \"version\" field");
  }
  const int v = j.at("version").get<int>();
  if (v != kSchemaVersion) {
    throw DataError(what + ": unsupported version " + std::to_string(v));
  }
}

void check_unit(const json& j, const std::string& expected, const std::string& what) {
  const std::string unit = j.at("unit").get<std::string>();
  if (unit != expected) {
    throw DataError(what + ": unit must be \"" + expected + "\", got \"" + unit + "\"");
  }
}

template <int Cols>
Eigen::Matrix<double, Eigen::Dynamic, Cols, Eigen::RowMajor> rows_from_json(
    const json& arr, const std::string& what) {
  if (!arr.is_array()) throw DataError(what + ": expected an array of rows");
  Eigen::Matrix<double, Eigen::Dynamic, Cols, Eigen::RowMajor> m(arr.size(), Cols);
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& row = arr[i];
    if (!row.is_array() || row.size() != Cols) {
      throw DataError(what + ": row " + std::to_string(i) + " must have " +
                      std::to_string(Cols) + " numbers");
    }
    for (int c = 0; c < Cols; ++c) {
      if (!row[c].is_number()) throw DataError(what + ": non-numeric value");
      m(i, c) = row[c].get<double>();
    }
  }
  if (!m.allFinite()) throw DataError(what + ": non-finite value");
  return m;
}

template <class M>
json rows_to_json(const M& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    arr.push_back(std::move(row));
  }
  return arr;
}

json rgb_to_json(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }

Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("palette: color must be an RGB triple");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

json topology_to_json(const SkeletonTopology& topo) {
  json limbs = json::array();
  for (const Limb& l : topo.limbs()) limbs.push_back(json::array({l.parent, l.child}));
  return {{"version", kSchemaVersion},
          {"joint_names", topo.joint_names()},
          {"parent", topo.parent()},
          {"limbs", limbs}};
}

SkeletonTopology topology_from_json(const json& j) {
  return schema_guard("topology", [&] {
    check_version(j, "topology");
    std::vector<Limb> limbs;
    for (const json& l : j.at("limbs")) {
      if (!l.is_array() || l.size() != 2) throw DataError("topology: limb must be a pair");
      limbs.push_back({l[0].get<int>(), l[1].get<int>()});
    }
    return SkeletonTopology(j.at("joint_names").get<std::vector<std::string>>(),
                            j.at("parent").get<std::vector<int>>(), std::move(limbs));
  });
}

void save_topology(const fs::path& path, const SkeletonTopology& topo) {
  save_json(path, topology_to_json(topo));
}

SkeletonTopology load_topology(const fs::path& path) {
  return topology_from_json(load_json(path));
}

json pose_to_json(const Pose3D& pose) {
  return {{"version", kSchemaVersion}, {"unit", "mm"}, {"positions", rows_to_json(pose.positions)}};
}

Pose3D pose_from_json(const json& j) {
  return schema_guard("pose", [&] {
    check_version(j, "pose");
    check_unit(j, "mm", "pose");
    return Pose3D{rows_from_json<3>(j.at("positions"), "pose")};
  });
}

void save_pose(const fs::path& path, const Pose3D& pose) { save_json(path, pose_to_json(pose)); }
Pose3D load_pose(const fs::path& path) { return pose_from_json(load_json(path)); }

json keypoints_to_json(const Keypoints2D& kps) {
  return {{"version", kSchemaVersion}, {"unit", "px"}, {"points", rows_to_json(kps.points)}};
}

Keypoints2D keypoints_from_json(const json& j) {
  return schema_guard("keypoints", [&] {
    check_version(j, "keypoints");
    check_unit(j, "px", "keypoints");
    return Keypoints2D{rows_from_json<2>(j.at("points"), "keypoints")};
  });
}

void save_keypoints(const fs::path& path, const Keypoints2D& kps) {
  save_json(path, keypoints_to_json(kps));
}
Keypoints2D load_keypoints(const fs::path& path) {
  return keypoints_from_json(load_json(path));
}

json stats_to_json(const BoneStats& stats) {
  return {{"version", kSchemaVersion}, {"unit", "mm"}, {"mean_length_mm", stats.mean_length}};
}

BoneStats stats_from_json(const json& j) {
  return schema_guard("bone stats", [&] {
    check_version(j, "bone stats");
    check_unit(j, "mm", "bone stats");
    BoneStats stats{j.at("mean_length_mm").get<std::vector<double>>()};
    for (double v : stats.mean_length) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DataError("bone stats: entries must be finite and strictly positive");
      }
    }
    return stats;
  });
}

void save_stats(const fs::path& path, const BoneStats& stats) {
  save_json(path, stats_to_json(stats));
}
BoneStats load_stats(const fs::path& path) { return stats_from_json(load_json(path)); }

json palette_to_json(const SegPalette& palette) {
  json colors = json::array();
  for (const Rgb& c : palette.limb_color) colors.push_back(rgb_to_json(c));
  return {{"version", kSchemaVersion},
          {"limb_colors", colors},
          {"background", rgb_to_json(palette.background_color)}};
}

SegPalette palette_from_json(const json& j) {
  return schema_guard("palette", [&] {
    check_version(j, "palette");
    SegPalette palette;
    for (const json& c : j.at("limb_colors")) palette.limb_color.push_back(rgb_from_json(c));
    palette.background_color = rgb_from_json(j.at("background"));
    check_palette(palette, static_cast<int>(palette.limb_color.size()));
    return palette;
  });
}

void save_palette(const fs::path& path, const SegPalette& palette) {
  save_json(path, palette_to_json(palette));
}
SegPalette load_palette(const fs::path& path) { return palette_from_json(load_json(path)); }

json regressor_config_to_json(const RegressorConfig& cfg) {
  json conv = json::array();
  for (const ConvSpec& c : cfg.conv) {
    conv.push_back({{"out_channels", c.out_channels}, {"kernel", c.kernel}, {"stride", c.stride}});
  }
  return {{"input_channels", cfg.input_channels},
          {"patch_res", cfg.patch_res},
          {"conv", conv},
          {"pooling", to_string(cfg.pooling)},
          {"fc_widths", cfg.fc_widths},
          {"output_dim", cfg.output_dim},
          {"seed", cfg.seed},
          {"modality", to_string(cfg.modality)}};
}

RegressorConfig regressor_config_from_json(const json& j) {
  return schema_guard("regressor config", [&] {
    RegressorConfig cfg;
    cfg.input_channels = j.at("input_channels").get<int>();
    cfg.patch_res = j.at("patch_res").get<int>();
    cfg.conv.clear();
    for (const json& c : j.at("conv")) {
      cfg.conv.push_back({c.at("out_channels").get<int>(), c.at("kernel").get<int>(),
                          c.at("stride").get<int>()});
    }
    cfg.pooling = pooling_from_string(j.at("pooling").get<std::string>());
    cfg.fc_widths = j.at("fc_widths").get<std::vector<int>>();
    cfg.output_dim = j.at("output_dim").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.modality = modality_from_string(j.value("modality", std::string("fused")));
    check_config(cfg);
    return cfg;
  });
}

json patch_config_to_json(const PatchConfig& cfg) {
  return {{"min_side", cfg.min_side}, {"scale", cfg.scale}, {"out_res", cfg.out_res}};
}

PatchConfig patch_config_from_json(const json& j) {
  return schema_guard("patch config", [&] {
    PatchConfig cfg;
    cfg.min_side = j.at("min_side").get<double>();
    cfg.scale = j.at("scale").get<double>();
    cfg.out_res = j.at("out_res").get<int>();
    if (!(cfg.scale > 0.0) || !(cfg.min_side >= 0.0) || cfg.out_res < 1) {
      throw DataError("patch config: invalid values");
    }
    return cfg;
  });
}

// ---------------------------------------------------------------- PNG

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

}  // namespace

// Low-level writer so the zlib level can be set; the simplified API always
// uses the slow default.
std::string encode_png(const Image& img) {
  check_image(img);
  std::vector<png_byte> pixels(img.data().size());
  for (size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<png_byte>(std::lround(img.data()[i] * 255.0));
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = pixels.data() + static_cast<size_t>(y) * img.width() * 3;
  }
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw DataError("png encode failed: out of memory");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png encode failed");
  }
  png_set_write_fn(png, &out, png_append, png_flush_noop);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(std::string_view bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError(std::string("png decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError(std::string("png decode failed: ") + image.message);
  }
  Image img(static_cast<int>(image.width), static_cast<int>(image.height));
  for (size_t i = 0; i < pixels.size(); ++i) img.data()[i] = pixels[i] / 255.0;
  return img;
}

void write_png(const fs::path& path, const Image& img) { atomic_write(path, encode_png(img)); }

Image read_png(const fs::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------- checkpoint

namespace {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(std::string_view bytes, size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw DataError("checkpoint: truncated file");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  check_params(ckpt.params, ckpt.regressor);
  const json cfg = {{"regressor", regressor_config_to_json(ckpt.regressor)},
                    {"patch", patch_config_to_json(ckpt.patch)},
                    {"param_count", ckpt.params.values.size()},
                    {"params_version", ckpt.params.version}};
  const std::string blob = cfg.dump();
  std::string out(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, blob.size());
  out += blob;
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ckpt.params.values.size()));
  out.append(reinterpret_cast<const char*>(ckpt.params.values.data()),
             ckpt.params.values.size() * sizeof(double));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic (expected PRFK)");
  }
  size_t pos = 4;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto blob_len = take<std::uint64_t>(bytes, pos);
  if (pos + blob_len > bytes.size()) throw DataError("checkpoint: truncated config");
  const std::string_view blob = bytes.substr(pos, blob_len);
  pos += blob_len;
  json cfg;
  try {
    cfg = json::parse(blob);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: invalid config JSON: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.regressor = regressor_config_from_json(schema_guard("checkpoint", [&] {
    return cfg.at("regressor");
  }));
  ckpt.patch = patch_config_from_json(schema_guard("checkpoint", [&] { return cfg.at("patch"); }));
  if (ckpt.patch.out_res != ckpt.regressor.patch_res) {
    throw DataError("checkpoint: patch out_res disagrees with regressor patch_res");
  }
  const auto count = take<std::uint64_t>(bytes, pos);
  if (bytes.size() - pos != count * sizeof(double)) {
    throw DataError("checkpoint: parameter payload size mismatch");
  }
  ckpt.params.values.resize(static_cast<Eigen::Index>(count));
  std::memcpy(ckpt.params.values.data(), bytes.data() + pos, count * sizeof(double));
  ckpt.params.layers = layer_shapes(ckpt.regressor);
  ckpt.params.version = schema_guard("checkpoint", [&] {
    return cfg.at("params_version").get<std::uint32_t>();
  });
  check_params(ckpt.params, ckpt.regressor);
  return ckpt;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  atomic_write(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const fs::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------ manifest

json manifest_to_json(const Manifest& m) {
  json samples = json::array();
  for (const ManifestEntry& e : m.samples) {
    samples.push_back({{"id", e.id},
                       {"split", e.split},
                       {"gt", e.gt},
                       {"init", e.init},
                       {"kp2d", e.kp2d},
                       {"rgb", e.rgb},
                       {"seg", e.seg},
                       {"rarity", e.rarity}});
  }
  return {{"version", m.version},
          {"generator_seed", m.generator_seed},
          {"config", m.config},
          {"config_hash", m.config_hash},
          {"topology", m.topology},
          {"palette", m.palette},
          {"bone_stats", m.bone_stats},
          {"samples", samples}};
}

Manifest manifest_from_json(const json& j) {
  return schema_guard("manifest", [&] {
    check_version(j, "manifest");
    Manifest m;
    m.generator_seed = j.at("generator_seed").get<std::uint64_t>();
    m.config = j.at("config");
    m.config_hash = j.at("config_hash").get<std::string>();
    m.topology = j.at("topology").get<std::string>();
    m.palette = j.at("palette").get<std::string>();
    m.bone_stats = j.at("bone_stats").get<std::string>();
    for (const json& s : j.at("samples")) {
      ManifestEntry e;
      e.id = s.at("id").get<std::string>();
      e.split = s.at("split").get<std::string>();
      if (e.split != "train" && e.split != "val" && e.split != "test") {
        throw DataError("manifest: unknown split '" + e.split + "'");
      }
      e.gt = s.at("gt").get<std::string>();
      e.init = s.at("init").get<std::string>();
      e.kp2d = s.at("kp2d").get<std::string>();
      e.rgb = s.at("rgb").get<std::string>();
      e.seg = s.at("seg").get<std::string>();
      e.rarity = s.at("rarity").get<double>();
      m.samples.push_back(std::move(e));
    }
    return m;
  });
}

void save_manifest(const fs::path& corpus_dir, const Manifest& m) {
  save_json(corpus_dir / "manifest.json", manifest_to_json(m));
}

Manifest load_manifest(const fs::path& corpus_dir) {
  const fs::path path = corpus_dir / "manifest.json";
  if (!fs::exists(path)) throw DataError("missing manifest: " + path.string());
  Manifest m = manifest_from_json(load_json(path));
  if (hex64(fnv1a64(dump_json(m.config))) != m.config_hash) {
    throw DataError(path.string() + ": config hash mismatch (checksum failure)");
  }
  auto require = [&](const std::string& rel) {
    const fs::path p = corpus_dir / rel;
    if (!fs::exists(p)) throw DataError("manifest references missing file: " + p.string());
  };
  require(m.topology);
  require(m.palette);
  require(m.bone_stats);
  for (const ManifestEntry& e : m.samples) {
    for (const std::string* rel : {&e.gt, &e.init, &e.kp2d, &e.rgb, &e.seg}) require(*rel);
  }
  return m;
}

}  // namespace poserefine
