// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "poserefine/error.hpp"
#include "poserefine/eval.hpp"
#include "poserefine/parallel.hpp"

namespace poserefine {

using nlohmann::json;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

// Unit vector uniform on the spherical cap of half-angle `cone_deg` around
// `axis`.
Eigen::Vector3d sample_cone(Rng& rng, const Eigen::Vector3d& axis, double cone_deg) {
  const double cos_max = std::cos(cone_deg * kDegToRad);
  const double cos_t = 1.0 - uniform01(rng) * (1.0 - cos_max);
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double phi = 2.0 * std::numbers::pi * uniform01(rng);
  const Eigen::Vector3d helper =
      std::abs(axis.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d b1 = axis.cross(helper).normalized();
  const Eigen::Vector3d b2 = axis.cross(b1);
  return cos_t * axis + sin_t * (std::cos(phi) * b1 + std::sin(phi) * b2);
}

Eigen::Vector3d slerp(const Eigen::Vector3d& from, const Eigen::Vector3d& to, double t) {
  const double omega = std::acos(std::clamp(from.dot(to), -1.0, 1.0));
  if (omega < 1e-12) return from;
  const double s = std::sin(omega);
  return (std::sin((1.0 - t) * omega) / s) * from + (std::sin(t * omega) / s) * to;
}

void check_prior(const PosePrior& prior, const SkeletonTopology& topo) {
  const auto limbs = static_cast<size_t>(topo.limb_count());
  if (prior.rest_direction.size() != limbs || prior.cone_deg.size() != limbs ||
      prior.region.size() != limbs || prior.limb_length_mm.size() != limbs) {
    throw DataError("pose prior does not match topology limb count");
  }
}

}  // namespace

Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

PosePrior default_pose_prior(const SkeletonTopology& topo) {
  struct LimbPrior {
    Eigen::Vector3d dir;
    double cone;
    BodyRegion region;
    double length;
  };
  const Eigen::Vector3d down(0, 1, 0), up(0, -1, 0), right(-1, 0, 0), left(1, 0, 0);
  // Keyed by child joint name; camera frame with the subject facing the camera.
  const std::map<std::string, LimbPrior> table = {
      {"right_hip", {right, 10, BodyRegion::kLegs, 130}},
      {"right_knee", {down, 35, BodyRegion::kLegs, 440}},
      {"right_ankle", {down, 35, BodyRegion::kLegs, 440}},
      {"left_hip", {left, 10, BodyRegion::kLegs, 130}},
      {"left_knee", {down, 35, BodyRegion::kLegs, 440}},
      {"left_ankle", {down, 35, BodyRegion::kLegs, 440}},
      {"spine", {up, 15, BodyRegion::kTorso, 230}},
      {"thorax", {up, 15, BodyRegion::kTorso, 250}},
      {"neck", {up, 20, BodyRegion::kSkin, 110}},
      {"head", {up, 25, BodyRegion::kSkin, 115}},
      {"left_shoulder", {left, 10, BodyRegion::kTorso, 150}},
      {"left_elbow", {Eigen::Vector3d(0.5, 1, 0).normalized(), 50, BodyRegion::kTorso, 280}},
      {"left_wrist", {Eigen::Vector3d(0.5, 1, 0).normalized(), 55, BodyRegion::kSkin, 250}},
      {"right_shoulder", {right, 10, BodyRegion::kTorso, 150}},
      {"right_elbow", {Eigen::Vector3d(-0.5, 1, 0).normalized(), 50, BodyRegion::kTorso, 280}},
      {"right_wrist", {Eigen::Vector3d(-0.5, 1, 0).normalized(), 55, BodyRegion::kSkin, 250}},
  };
  PosePrior prior;
  for (const Limb& limb : topo.limbs()) {
    const auto it = table.find(topo.joint_names()[limb.child]);
    const LimbPrior p = it != table.end() ? it->second
                                          : LimbPrior{down, 30, BodyRegion::kTorso, 250};
    prior.rest_direction.push_back(p.dir);
    prior.cone_deg.push_back(p.cone);
    prior.region.push_back(p.region);
    prior.limb_length_mm.push_back(p.length);
  }
  return prior;
}

Pose3D sample_pose(Rng& rng, std::span<const double> limb_lengths,
                   const SkeletonTopology& topo, const PosePrior& prior) {
  check_prior(prior, topo);
  if (static_cast<int>(limb_lengths.size()) != topo.limb_count()) {
    throw DataError("sample_pose: limb length count does not match topology");
  }
  Pose3D pose;
  pose.positions.resize(topo.joint_count(), 3);
  pose.positions.row(topo.root()) = prior.root_position.transpose();
  for (int k : topo.limb_visit_order()) {
    const Limb& limb = topo.limbs()[k];
    const Eigen::Vector3d u = sample_cone(rng, prior.rest_direction[k], prior.cone_deg[k]);
    pose.positions.row(limb.child) =
        pose.positions.row(limb.parent) + limb_lengths[k] * u.transpose();
  }
  return pose;
}

Pose3D rest_pose(std::span<const double> limb_lengths, const SkeletonTopology& topo,
                 const PosePrior& prior) {
  check_prior(prior, topo);
  Pose3D pose;
  pose.positions.resize(topo.joint_count(), 3);
  pose.positions.row(topo.root()) = prior.root_position.transpose();
  for (int k : topo.limb_visit_order()) {
    const Limb& limb = topo.limbs()[k];
    pose.positions.row(limb.child) = pose.positions.row(limb.parent) +
                                     limb_lengths[k] * prior.rest_direction[k].transpose();
  }
  return pose;
}

Keypoints2D project(const Pose3D& pose, const CameraModel& cam) {
  Keypoints2D kps;
  kps.points.resize(pose.joint_count(), 2);
  for (int j = 0; j < pose.joint_count(); ++j) {
    const double z = pose.positions(j, 2);
    if (!(z > 0.0)) throw DataError("project: joint " + std::to_string(j) + " has depth <= 0");
    kps.points(j, 0) = cam.focal * pose.positions(j, 0) / z + cam.principal.x();
    kps.points(j, 1) = cam.focal * pose.positions(j, 1) / z + cam.principal.y();
  }
  return kps;
}

namespace {

// Closest-point parameter of p on segment ab, in [0, 1].
double segment_param(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                     const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return 0.0;
  return std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
}

}  // namespace

Mask limb_mask(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double thickness,
               int width, int height) {
  Mask mask(width, height);
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - thickness)) - 1);
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + thickness)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - thickness)) - 1);
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + thickness)) + 1);
  const double t2 = thickness * thickness;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Eigen::Vector2d p(x + 0.5, y + 0.5);
      const double t = segment_param(p, a, b);
      if ((p - (a + t * (b - a))).squaredNorm() <= t2) mask.set(x, y);
    }
  }
  return mask;
}

SceneRender render_scene(const Pose3D& pose, const CameraModel& cam,
                         const SegPalette& palette, const SkeletonTopology& topo,
                         const PosePrior& prior, const RenderConfig& cfg, Rng& rng) {
  check_prior(prior, topo);
  check_palette(palette, topo.limb_count());
  const Keypoints2D kps = project(pose, cam);
  const int limbs = topo.limb_count();

  SceneRender out;
  std::vector<double> mean_depth(limbs);
  for (int k = 0; k < limbs; ++k) {
    const Limb& limb = topo.limbs()[k];
    out.masks.push_back(limb_mask(kps.points.row(limb.parent).transpose(),
                                  kps.points.row(limb.child).transpose(),
                                  cfg.limb_thickness_px, cam.width, cam.height));
    mean_depth[k] = 0.5 * (pose.positions(limb.parent, 2) + pose.positions(limb.child, 2));
  }
  out.depth_order.resize(limbs);
  for (int k = 0; k < limbs; ++k) out.depth_order[k] = k;
  std::stable_sort(out.depth_order.begin(), out.depth_order.end(),
                   [&](int a, int b) { return mean_depth[a] > mean_depth[b]; });
  out.seg = colorize_segmentation(out.masks, palette, out.depth_order);

  // Appearance: one clothing color per body region, per-limb brightness.
  std::array<Rgb, 3> region_color;
  for (Rgb& c : region_color) {
    for (double& v : c) v = 0.25 + 0.65 * uniform01(rng);
  }
  const double skin = 0.55 + 0.35 * uniform01(rng);
  region_color[static_cast<int>(BodyRegion::kSkin)] = {skin, 0.8 * skin, 0.65 * skin};
  std::vector<double> brightness(limbs);
  for (double& b : brightness) b = 0.85 + 0.15 * uniform01(rng);
  const double ph1 = 2.0 * std::numbers::pi * uniform01(rng);
  const double ph2 = 2.0 * std::numbers::pi * uniform01(rng);
  const double ph3 = 2.0 * std::numbers::pi * uniform01(rng);

  Image rgb(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double v = 0.45 + 0.12 * std::sin(0.11 * x + ph1) * std::cos(0.07 * y + ph2) +
                       0.08 * std::sin(0.23 * (x + y) + ph3);
      rgb.set_pixel(x, y, {v, v, v});
    }
  }
  const double z_ref = prior.root_position.z();
  for (int k : out.depth_order) {
    const Limb& limb = topo.limbs()[k];
    const Eigen::Vector2d a = kps.points.row(limb.parent).transpose();
    const Eigen::Vector2d b = kps.points.row(limb.child).transpose();
    const double za = pose.positions(limb.parent, 2);
    const double zb = pose.positions(limb.child, 2);
    const Rgb& base = region_color[static_cast<int>(prior.region[k])];
    const Mask& m = out.masks[k];
    const double pad = cfg.limb_thickness_px + 2.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - pad)));
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + pad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - pad)));
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + pad)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (!m.get(x, y)) continue;
        const double t = segment_param(Eigen::Vector2d(x + 0.5, y + 0.5), a, b);
        const double z = za + t * (zb - za);
        const double shade =
            std::clamp(0.55 + cfg.depth_shading * (z_ref - z) / 300.0, 0.1, 1.0);
        Rgb px;
        for (int c = 0; c < 3; ++c) {
          px[c] = cfg.contrast * base[c] * shade * brightness[k] + (1.0 - cfg.contrast) * 0.5;
        }
        rgb.set_pixel(x, y, px);
      }
    }
  }
  for (double& v : rgb.data()) v = std::clamp(v + cfg.rgb_noise * gaussian(rng), 0.0, 1.0);
  out.rgb = std::move(rgb);
  return out;
}

Pose3D perturb_initial(const Pose3D& gt, const PerturbConfig& cfg,
                       const SkeletonTopology& topo, const PosePrior& prior, Rng& rng) {
  check_pose(gt, topo);
  check_prior(prior, topo);
  if (cfg.orient_noise_deg < 0 || cfg.length_noise_frac < 0 || cfg.root_noise_mm < 0 ||
      cfg.prior_pull < 0 || cfg.prior_pull > 1) {
    throw DataError("perturb config: scales must be non-negative, prior_pull in [0, 1]");
  }
  const Points3 disp = limb_displacements(gt, topo);
  Points3 delta = Points3::Zero(topo.limb_count(), 3);
  const double sigma = cfg.orient_noise_deg * kDegToRad;
  for (int k = 0; k < topo.limb_count(); ++k) {
    const Eigen::Vector3d rot_vec(sigma * gaussian(rng), sigma * gaussian(rng),
                                  sigma * gaussian(rng));
    const double eps = cfg.length_noise_frac * gaussian(rng);
    if (cfg.prior_pull == 0.0 && rot_vec.isZero(0.0) && eps == 0.0) continue;
    const Eigen::Vector3d d = disp.row(k).transpose();
    const double len = d.norm();
    if (len <= 0.0) continue;
    Eigen::Vector3d dir = d / len;
    if (cfg.prior_pull > 0.0) dir = slerp(dir, prior.rest_direction[k], cfg.prior_pull);
    const double angle = rot_vec.norm();
    if (angle > 0.0) dir = Eigen::AngleAxisd(angle, rot_vec / angle) * dir;
    delta.row(k) = (len * (1.0 + eps) * dir - d).transpose();
  }
  const Eigen::RowVector3d root_shift(cfg.root_noise_mm * gaussian(rng),
                                      cfg.root_noise_mm * gaussian(rng),
                                      cfg.root_noise_mm * gaussian(rng));
  Pose3D out = gt;
  out.positions += reconstruct(delta, root_shift, topo).positions;
  return out;
}

double rarity_score(const Pose3D& pose, std::span<const Pose3D> reference,
                    const SkeletonTopology& topo) {
  if (reference.empty()) throw DataError("rarity_score: empty reference set");
  double best = std::numeric_limits<double>::infinity();
  for (const Pose3D& ref : reference) best = std::min(best, mpjpe(pose, ref, topo));
  return best;
}

SplitSizes split_sizes(int n, double val_fraction, double test_fraction) {
  if (n < 1) throw DataError("corpus size must be >= 1");
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction > 1) {
    throw DataError("split fractions must be non-negative and sum to at most 1");
  }
  SplitSizes s;
  s.val = static_cast<int>(std::floor(n * val_fraction));
  s.test = static_cast<int>(std::floor(n * test_fraction));
  s.train = n - s.val - s.test;
  return s;
}

// ------------------------------------------------------------ config I/O

namespace {

const char* region_name(BodyRegion r) {
  switch (r) {
    case BodyRegion::kTorso: return "torso";
    case BodyRegion::kLegs: return "legs";
    case BodyRegion::kSkin: return "skin";
  }
  return "torso";
}

BodyRegion region_from_name(const std::string& s) {
  if (s == "torso") return BodyRegion::kTorso;
  if (s == "legs") return BodyRegion::kLegs;
  if (s == "skin") return BodyRegion::kSkin;
  throw DataError("unknown body region '" + s + "'");
}

}  // namespace

json generator_config_to_json(const GeneratorConfig& cfg) {
  json dirs = json::array();
  for (const auto& d : cfg.prior.rest_direction) dirs.push_back({d.x(), d.y(), d.z()});
  json regions = json::array();
  for (BodyRegion r : cfg.prior.region) regions.push_back(region_name(r));
  const auto& rp = cfg.prior.root_position;
  return {
      {"camera",
       {{"focal", cfg.camera.focal},
        {"principal", {cfg.camera.principal.x(), cfg.camera.principal.y()}},
        {"width", cfg.camera.width},
        {"height", cfg.camera.height}}},
      {"render",
       {{"limb_thickness_px", cfg.render.limb_thickness_px},
        {"rgb_noise", cfg.render.rgb_noise},
        {"contrast", cfg.render.contrast},
        {"depth_shading", cfg.render.depth_shading}}},
      {"perturb",
       {{"orient_noise_deg", cfg.perturb.orient_noise_deg},
        {"length_noise_frac", cfg.perturb.length_noise_frac},
        {"root_noise_mm", cfg.perturb.root_noise_mm},
        {"prior_pull", cfg.perturb.prior_pull}}},
      {"prior",
       {{"rest_direction", dirs},
        {"cone_deg", cfg.prior.cone_deg},
        {"region", regions},
        {"limb_length_mm", cfg.prior.limb_length_mm},
        {"root_position", {rp.x(), rp.y(), rp.z()}}}},
      {"val_fraction", cfg.val_fraction},
      {"test_fraction", cfg.test_fraction},
      {"subject_scale_jitter", cfg.subject_scale_jitter}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  try {
    GeneratorConfig cfg;
    const json& cam = j.at("camera");
    cfg.camera.focal = cam.at("focal").get<double>();
    cfg.camera.principal = {cam.at("principal")[0].get<double>(),
                            cam.at("principal")[1].get<double>()};
    cfg.camera.width = cam.at("width").get<int>();
    cfg.camera.height = cam.at("height").get<int>();
    const json& r = j.at("render");
    cfg.render.limb_thickness_px = r.at("limb_thickness_px").get<double>();
    cfg.render.rgb_noise = r.at("rgb_noise").get<double>();
    cfg.render.contrast = r.at("contrast").get<double>();
    cfg.render.depth_shading = r.at("depth_shading").get<double>();
    const json& p = j.at("perturb");
    cfg.perturb.orient_noise_deg = p.at("orient_noise_deg").get<double>();
    cfg.perturb.length_noise_frac = p.at("length_noise_frac").get<double>();
    cfg.perturb.root_noise_mm = p.at("root_noise_mm").get<double>();
    cfg.perturb.prior_pull = p.at("prior_pull").get<double>();
    const json& pr = j.at("prior");
    for (const json& d : pr.at("rest_direction")) {
      cfg.prior.rest_direction.emplace_back(d[0].get<double>(), d[1].get<double>(),
                                            d[2].get<double>());
    }
    cfg.prior.cone_deg = pr.at("cone_deg").get<std::vector<double>>();
    for (const json& s : pr.at("region")) cfg.prior.region.push_back(region_from_name(s));
    cfg.prior.limb_length_mm = pr.at("limb_length_mm").get<std::vector<double>>();
    const json& rp = pr.at("root_position");
    cfg.prior.root_position = {rp[0].get<double>(), rp[1].get<double>(), rp[2].get<double>()};
    cfg.val_fraction = j.at("val_fraction").get<double>();
    cfg.test_fraction = j.at("test_fraction").get<double>();
    cfg.subject_scale_jitter = j.at("subject_scale_jitter").get<double>();
    return cfg;
  } catch (const json::exception& e) {
    throw DataError(std::string("generator config: schema violation: ") + e.what());
  }
}

// --------------------------------------------------------------- corpus

namespace {

std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

const char* split_of(int index, const SplitSizes& sizes) {
  if (index < sizes.train) return "train";
  if (index < sizes.train + sizes.val) return "val";
  return "test";
}

}  // namespace

SceneSample generate_sample(std::uint64_t seed, int index, const GeneratorConfig& cfg,
                            const SkeletonTopology& topo, const PosePrior& prior,
                            const SegPalette& palette) {
  Rng rng = stream_rng(seed, static_cast<std::uint64_t>(index));
  const double scale = 1.0 + cfg.subject_scale_jitter * (2.0 * uniform01(rng) - 1.0);
  std::vector<double> lengths = prior.limb_length_mm;
  for (double& l : lengths) l *= scale;

  SceneSample s;
  s.id = sample_id(index);
  s.gt_pose = sample_pose(rng, lengths, topo, prior);
  s.initial_pose = perturb_initial(s.gt_pose, cfg.perturb, topo, prior, rng);
  s.keypoints = project(s.gt_pose, cfg.camera);
  SceneRender render = render_scene(s.gt_pose, cfg.camera, palette, topo, prior, cfg.render, rng);
  s.rgb = std::move(render.rgb);
  s.seg = std::move(render.seg);
  return s;
}

Manifest generate_corpus(int n, std::uint64_t seed, const GeneratorConfig& config,
                         const fs::path& out_dir) {
  const SkeletonTopology topo = default_topology();
  GeneratorConfig cfg = config;
  if (cfg.prior.rest_direction.empty()) cfg.prior = default_pose_prior(topo);
  const PosePrior& prior = cfg.prior;
  const SegPalette palette = default_palette(topo.limb_count());
  const SplitSizes sizes = split_sizes(n, cfg.val_fraction, cfg.test_fraction);

  fs::create_directories(out_dir / "samples");
  Manifest m;
  m.generator_seed = seed;
  m.config = generator_config_to_json(cfg);
  m.config_hash = hex64(fnv1a64(dump_json(m.config)));

  std::vector<Pose3D> gt(n);
  m.samples.resize(n);
  parallel_for(static_cast<size_t>(n), [&](size_t i) {
    const int index = static_cast<int>(i);
    SceneSample s = generate_sample(seed, index, cfg, topo, prior, palette);
    const std::string rel = "samples/" + s.id + "/";
    ManifestEntry& e = m.samples[i];
    e.id = s.id;
    e.split = split_of(index, sizes);
    e.gt = rel + "gt.json";
    e.init = rel + "init.json";
    e.kp2d = rel + "kp2d.json";
    e.rgb = rel + "rgb.png";
    e.seg = rel + "seg.png";
    save_pose(out_dir / e.gt, s.gt_pose);
    save_pose(out_dir / e.init, s.initial_pose);
    save_keypoints(out_dir / e.kp2d, s.keypoints);
    write_png(out_dir / e.rgb, s.rgb);
    write_png(out_dir / e.seg, s.seg);
    gt[i] = std::move(s.gt_pose);
  });

  const std::span<const Pose3D> train_gt(gt.data(), sizes.train);
  const std::span<const Pose3D> stats_source = sizes.train > 0 ? train_gt : std::span<const Pose3D>(gt);
  save_topology(out_dir / m.topology, topo);
  save_palette(out_dir / m.palette, palette);
  save_stats(out_dir / m.bone_stats, compute_bone_stats(stats_source, topo));

  // Rarity against the training split; training samples skip themselves.
  parallel_for(static_cast<size_t>(n), [&](size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < static_cast<int>(stats_source.size()); ++r) {
      if (static_cast<size_t>(r) == i) continue;
      best = std::min(best, mpjpe(gt[i], stats_source[r], topo));
    }
    m.samples[i].rarity = std::isfinite(best) ? best : 0.0;
  });
  save_manifest(out_dir, m);
  return m;
}

std::vector<const ManifestEntry*> Corpus::entries(const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : manifest.samples) {
    if (split == "all" || e.split == split) out.push_back(&e);
  }
  return out;
}

Corpus load_corpus(const fs::path& dir) {
  Corpus c;
  c.root = dir;
  c.manifest = load_manifest(dir);
  c.topology = load_topology(dir / c.manifest.topology);
  c.palette = load_palette(dir / c.manifest.palette);
  check_palette(c.palette, c.topology.limb_count());
  c.stats = load_stats(dir / c.manifest.bone_stats);
  check_stats(c.stats, c.topology);
  c.generator = generator_config_from_json(c.manifest.config);
  return c;
}

SceneSample load_sample(const Corpus& corpus, const ManifestEntry& entry, bool with_images) {
  SceneSample s;
  s.id = entry.id;
  s.split = entry.split;
  s.rarity = entry.rarity;
  s.gt_pose = load_pose(corpus.root / entry.gt);
  s.initial_pose = load_pose(corpus.root / entry.init);
  s.keypoints = load_keypoints(corpus.root / entry.kp2d);
  check_pose(s.gt_pose, corpus.topology);
  check_pose(s.initial_pose, corpus.topology);
  if (s.keypoints.joint_count() != corpus.topology.joint_count()) {
    throw DataError(entry.kp2d + ": keypoint count does not match topology");
  }
  if (with_images) {
    s.rgb = read_png(corpus.root / entry.rgb);
    s.seg = read_png(corpus.root / entry.seg);
    if (s.rgb.width() != s.seg.width() || s.rgb.height() != s.seg.height()) {
      throw DataError("sample " + entry.id + ": rgb and seg sizes differ");
    }
  }
  return s;
}

}  // namespace poserefine
