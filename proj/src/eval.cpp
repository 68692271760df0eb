// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/eval.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "poserefine/error.hpp"
#include "poserefine/parallel.hpp"
#include "poserefine/regressor.hpp"
#include "poserefine/synth.hpp"

namespace poserefine {

using nlohmann::json;

std::vector<double> joint_errors(const Pose3D& pred, const Pose3D& gt,
                                 const SkeletonTopology& topo) {
  if (pred.joint_count() != gt.joint_count() || gt.joint_count() != topo.joint_count()) {
    throw DataError("mpjpe: pose sizes do not match");
  }
  const Points3 a = root_relative(pred, topo).positions;
  const Points3 b = root_relative(gt, topo).positions;
  std::vector<double> err(gt.joint_count());
  for (int j = 0; j < gt.joint_count(); ++j) err[j] = (a.row(j) - b.row(j)).norm();
  return err;
}

double mpjpe(const Pose3D& pred, const Pose3D& gt, const SkeletonTopology& topo) {
  const std::vector<double> err = joint_errors(pred, gt, topo);
  return std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(err.size());
}

std::vector<double> orientation_error_deg(const Pose3D& pred, const Pose3D& gt,
                                          const SkeletonTopology& topo) {
  check_pose(pred, topo);
  check_pose(gt, topo);
  const Points3 a = limb_displacements(pred, topo);
  const Points3 b = limb_displacements(gt, topo);
  std::vector<double> out(topo.limb_count());
  for (int k = 0; k < topo.limb_count(); ++k) {
    const double na = a.row(k).norm();
    const double nb = b.row(k).norm();
    if (!(na > 0.0) || !(nb > 0.0)) {
      throw DataError("orientation_error_deg: zero-length limb " + std::to_string(k));
    }
    // atan2 of cross and dot norms stays accurate near 0 and 180 degrees.
    const Eigen::Vector3d u = a.row(k).transpose();
    const Eigen::Vector3d v = b.row(k).transpose();
    out[k] = std::atan2(u.cross(v).norm(), u.dot(v)) * 180.0 / std::numbers::pi;
  }
  return out;
}

std::vector<RarityBucket> rarity_buckets(const std::vector<SampleResult>& samples,
                                         int bucket_count) {
  if (samples.empty()) return {};
  if (bucket_count < 1) throw DataError("rarity bucket count must be >= 1");
  const int n = static_cast<int>(samples.size());
  const int buckets = std::min(bucket_count, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return samples[a].rarity < samples[b].rarity; });
  std::vector<RarityBucket> out(buckets);
  for (int b = 0; b < buckets; ++b) {
    const int begin = static_cast<int>(static_cast<long long>(b) * n / buckets);
    const int end = static_cast<int>(static_cast<long long>(b + 1) * n / buckets);
    RarityBucket& bucket = out[b];
    bucket.count = end - begin;
    bucket.lower = samples[order[begin]].rarity;
    bucket.upper = samples[order[end - 1]].rarity;
    for (int r = begin; r < end; ++r) {
      bucket.mpjpe_initial += samples[order[r]].mpjpe_initial;
      bucket.mpjpe_refined += samples[order[r]].mpjpe_refined;
    }
    bucket.mpjpe_initial /= bucket.count;
    bucket.mpjpe_refined /= bucket.count;
  }
  return out;
}

EvalReport evaluate(const Corpus& corpus, const std::string& split,
                    const Predictor& predictor, const EvalOptions& options) {
  const std::vector<const ManifestEntry*> entries = corpus.entries(split);
  if (entries.empty()) throw DataError("evaluate: split '" + split + "' is empty");
  const SkeletonTopology& topo = corpus.topology;

  std::vector<Pose3D> reference;
  std::vector<std::string> reference_ids;
  for (const ManifestEntry* e : corpus.entries("train")) {
    reference.push_back(load_pose(corpus.root / e->gt));
    reference_ids.push_back(e->id);
  }
  // Training samples are scored against the other training poses.
  auto rarity_of = [&](const SceneSample& s) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < reference.size(); ++r) {
      if (reference_ids[r] != s.id) best = std::min(best, mpjpe(s.gt_pose, reference[r], topo));
    }
    return std::isfinite(best) ? best : 0.0;
  };

  struct PerSample {
    SampleResult result;
    std::vector<double> joint_init, joint_ref, orient_init, orient_ref;
  };
  std::vector<PerSample> per(entries.size());
  parallel_for(entries.size(), [&](size_t i) {
    SceneSample s = load_sample(corpus, *entries[i]);
    PatchVolume volume = build_volume(s.rgb, s.seg, s.keypoints, topo, options.patch);
    apply_modality(volume, options.modality);
    const FlatResidual delta = predictor(s, volume);
    if (!delta.values.allFinite()) {
      throw NumericalError("evaluate: non-finite residual for sample " + s.id);
    }
    PerSample& p = per[i];
    p.result.id = s.id;
    p.result.refined = apply_residual(s.initial_pose, delta, corpus.stats, topo);
    p.result.rarity = rarity_of(s);
    p.joint_init = joint_errors(s.initial_pose, s.gt_pose, topo);
    p.joint_ref = joint_errors(p.result.refined, s.gt_pose, topo);
    p.orient_init = orientation_error_deg(s.initial_pose, s.gt_pose, topo);
    p.orient_ref = orientation_error_deg(p.result.refined, s.gt_pose, topo);
    const auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    p.result.mpjpe_initial = mean(p.joint_init);
    p.result.mpjpe_refined = mean(p.joint_ref);
  });

  EvalReport report;
  report.split = split;
  report.joint_names = topo.joint_names();
  const int n = static_cast<int>(per.size());
  report.per_joint_errors.assign(topo.joint_count(), 0.0);
  report.per_joint_errors_initial.assign(topo.joint_count(), 0.0);
  report.per_limb_orient_err_deg.assign(topo.limb_count(), 0.0);
  report.per_limb_orient_err_deg_initial.assign(topo.limb_count(), 0.0);
  for (const PerSample& p : per) {
    report.mpjpe_initial += p.result.mpjpe_initial;
    report.mpjpe_refined += p.result.mpjpe_refined;
    for (int j = 0; j < topo.joint_count(); ++j) {
      report.per_joint_errors[j] += p.joint_ref[j];
      report.per_joint_errors_initial[j] += p.joint_init[j];
    }
    for (int k = 0; k < topo.limb_count(); ++k) {
      report.per_limb_orient_err_deg[k] += p.orient_ref[k];
      report.per_limb_orient_err_deg_initial[k] += p.orient_init[k];
    }
    report.samples.push_back(p.result);
  }
  report.mpjpe_initial /= n;
  report.mpjpe_refined /= n;
  for (double& v : report.per_joint_errors) v /= n;
  for (double& v : report.per_joint_errors_initial) v /= n;
  for (double& v : report.per_limb_orient_err_deg) v /= n;
  for (double& v : report.per_limb_orient_err_deg_initial) v /= n;
  report.rarity_buckets = rarity_buckets(report.samples, options.rarity_buckets);
  return report;
}

EvalReport evaluate(const Corpus& corpus, const std::string& split, const Checkpoint& ckpt,
                    int rarity_buckets) {
  if (ckpt.regressor.input_channels != 6 * corpus.topology.limb_count()) {
    throw DataError("checkpoint input channels do not match corpus topology");
  }
  EvalOptions options;
  options.patch = ckpt.patch;
  options.modality = ckpt.regressor.modality;
  options.rarity_buckets = rarity_buckets;
  return evaluate(
      corpus, split,
      [&](const SceneSample&, const PatchVolume& volume) {
        return predict(ckpt.params, ckpt.regressor, volume);
      },
      options);
}

namespace {

void draw_line(Image& img, Eigen::Vector2d a, Eigen::Vector2d b, const Rgb& color) {
  const double len = (b - a).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
  for (int i = 0; i <= steps; ++i) {
    const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(i) / steps);
    for (int dy = -1; dy <= 0; ++dy) {
      for (int dx = -1; dx <= 0; ++dx) {
        const int x = static_cast<int>(std::floor(p.x())) + dx;
        const int y = static_cast<int>(std::floor(p.y())) + dy;
        if (x >= 0 && y >= 0 && x < img.width() && y < img.height()) img.set_pixel(x, y, color);
      }
    }
  }
}

}  // namespace

Image render_overlay(const Pose3D& gt, const Pose3D& initial, const Pose3D& refined,
                     const SkeletonTopology& topo, double focal, int panel) {
  check_pose(gt, topo);
  check_pose(initial, topo);
  check_pose(refined, topo);
  Image img(2 * panel, panel);
  const double depth = 4000.0;
  auto draw = [&](const Pose3D& pose, const Rgb& color) {
    const Points3 rel = root_relative(pose, topo).positions;
    for (int view = 0; view < 2; ++view) {
      auto to_px = [&](int j) {
        Eigen::Vector3d p = rel.row(j).transpose();
        if (view == 1) p = Eigen::Vector3d(-p.z(), p.y(), p.x());  // side view
        const double z = depth + p.z();
        return Eigen::Vector2d(view * panel + 0.5 * panel + focal * 0.5 * p.x() / z,
                               0.5 * panel + focal * 0.5 * p.y() / z);
      };
      for (const Limb& limb : topo.limbs()) draw_line(img, to_px(limb.parent), to_px(limb.child), color);
    }
  };
  draw(gt, {1.0, 1.0, 1.0});
  draw(initial, {0.2, 0.4, 1.0});
  draw(refined, {1.0, 0.15, 0.15});
  for (int y = 0; y < panel; ++y) img.set_pixel(panel, y, {0.3, 0.3, 0.3});
  return img;
}

std::vector<RefinedPose> refine_split(const Corpus& corpus, const std::string& split,
                                      const Checkpoint& ckpt) {
  const std::vector<const ManifestEntry*> entries = corpus.entries(split);
  if (entries.empty()) throw DataError("refine: split '" + split + "' is empty");
  if (ckpt.regressor.input_channels != 6 * corpus.topology.limb_count()) {
    throw DataError("checkpoint input channels do not match corpus topology");
  }
  std::vector<RefinedPose> out(entries.size());
  parallel_for(entries.size(), [&](size_t i) {
    const SceneSample s = load_sample(corpus, *entries[i]);
    PatchVolume volume = build_volume(s.rgb, s.seg, s.keypoints, corpus.topology, ckpt.patch);
    apply_modality(volume, ckpt.regressor.modality);
    const FlatResidual delta = predict(ckpt.params, ckpt.regressor, volume);
    if (!delta.values.allFinite()) {
      throw NumericalError("refine: non-finite residual for sample " + s.id);
    }
    out[i] = {s.id, apply_residual(s.initial_pose, delta, corpus.stats, corpus.topology)};
  });
  return out;
}

json report_to_json(const EvalReport& r) {
  json buckets = json::array();
  for (const RarityBucket& b : r.rarity_buckets) {
    buckets.push_back({{"lower", b.lower},
                       {"upper", b.upper},
                       {"count", b.count},
                       {"mpjpe_initial", b.mpjpe_initial},
                       {"mpjpe_refined", b.mpjpe_refined}});
  }
  json samples = json::array();
  for (const SampleResult& s : r.samples) {
    json positions = json::array();
    for (Eigen::Index j = 0; j < s.refined.positions.rows(); ++j) {
      positions.push_back({s.refined.positions(j, 0), s.refined.positions(j, 1),
                           s.refined.positions(j, 2)});
    }
    samples.push_back({{"id", s.id},
                       {"rarity", s.rarity},
                       {"mpjpe_initial", s.mpjpe_initial},
                       {"mpjpe_refined", s.mpjpe_refined},
                       {"refined_positions", positions}});
  }
  return {{"version", kSchemaVersion},
          {"corpus", r.corpus},
          {"split", r.split},
          {"alignment", r.alignment},
          {"procrustes", false},
          {"unit", "mm"},
          {"mpjpe_initial", r.mpjpe_initial},
          {"mpjpe_refined", r.mpjpe_refined},
          {"joint_names", r.joint_names},
          {"per_joint_errors", r.per_joint_errors},
          {"per_joint_errors_initial", r.per_joint_errors_initial},
          {"per_limb_orient_err_deg", r.per_limb_orient_err_deg},
          {"per_limb_orient_err_deg_initial", r.per_limb_orient_err_deg_initial},
          {"rarity_buckets", buckets},
          {"samples", samples}};
}

EvalReport report_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kSchemaVersion) {
      throw DataError("eval report: unsupported version");
    }
    EvalReport r;
    r.corpus = j.value("corpus", std::string());
    r.split = j.at("split").get<std::string>();
    r.alignment = j.at("alignment").get<std::string>();
    r.mpjpe_initial = j.at("mpjpe_initial").get<double>();
    r.mpjpe_refined = j.at("mpjpe_refined").get<double>();
    r.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    r.per_joint_errors = j.at("per_joint_errors").get<std::vector<double>>();
    r.per_joint_errors_initial = j.at("per_joint_errors_initial").get<std::vector<double>>();
    r.per_limb_orient_err_deg = j.at("per_limb_orient_err_deg").get<std::vector<double>>();
    r.per_limb_orient_err_deg_initial =
        j.at("per_limb_orient_err_deg_initial").get<std::vector<double>>();
    for (const json& b : j.at("rarity_buckets")) {
      r.rarity_buckets.push_back({b.at("lower").get<double>(), b.at("upper").get<double>(),
                                  b.at("count").get<int>(), b.at("mpjpe_initial").get<double>(),
                                  b.at("mpjpe_refined").get<double>()});
    }
    for (const json& s : j.at("samples")) {
      SampleResult res;
      res.id = s.at("id").get<std::string>();
      res.rarity = s.at("rarity").get<double>();
      res.mpjpe_initial = s.at("mpjpe_initial").get<double>();
      res.mpjpe_refined = s.at("mpjpe_refined").get<double>();
      const json& pos = s.at("refined_positions");
      res.refined.positions.resize(static_cast<Eigen::Index>(pos.size()), 3);
      for (size_t i = 0; i < pos.size(); ++i) {
        for (int c = 0; c < 3; ++c) res.refined.positions(i, c) = pos[i][c].get<double>();
      }
      r.samples.push_back(std::move(res));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("eval report: schema violation: ") + e.what());
  }
}

std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  char line[256];
  const auto rel = [](double init, double ref) {
    return init > 0.0 ? 100.0 * (init - ref) / init : 0.0;
  };
  out << "split: " << r.split << "   alignment: root translation, no Procrustes   unit: mm\n";
  std::snprintf(line, sizeof(line), "%-18s %12s %12s %10s\n", "", "initial", "refined",
                "improve%");
  out << line;
  std::snprintf(line, sizeof(line), "%-18s %12.3f %12.3f %10.2f\n", "MPJPE", r.mpjpe_initial,
                r.mpjpe_refined, rel(r.mpjpe_initial, r.mpjpe_refined));
  out << line << "\nper joint\n";
  for (size_t j = 0; j < r.per_joint_errors.size(); ++j) {
    const std::string name = j < r.joint_names.size() ? r.joint_names[j] : std::to_string(j);
    std::snprintf(line, sizeof(line), "%-18s %12.3f %12.3f %10.2f\n", name.c_str(),
                  r.per_joint_errors_initial[j], r.per_joint_errors[j],
                  rel(r.per_joint_errors_initial[j], r.per_joint_errors[j]));
    out << line;
  }
  out << "\nper limb orientation error (deg)\n";
  for (size_t k = 0; k < r.per_limb_orient_err_deg.size(); ++k) {
    std::snprintf(line, sizeof(line), "limb %-13zu %12.3f %12.3f %10.2f\n", k,
                  r.per_limb_orient_err_deg_initial[k], r.per_limb_orient_err_deg[k],
                  rel(r.per_limb_orient_err_deg_initial[k], r.per_limb_orient_err_deg[k]));
    out << line;
  }
  out << "\nrarity buckets (nearest-train MPJPE, mm)\n";
  std::snprintf(line, sizeof(line), "%-18s %6s %12s %12s %10s\n", "range", "count", "initial",
                "refined", "improve%");
  out << line;
  for (const RarityBucket& b : r.rarity_buckets) {
    char range[64];
    std::snprintf(range, sizeof(range), "%.1f-%.1f", b.lower, b.upper);
    std::snprintf(line, sizeof(line), "%-18s %6d %12.3f %12.3f %10.2f\n", range, b.count,
                  b.mpjpe_initial, b.mpjpe_refined, rel(b.mpjpe_initial, b.mpjpe_refined));
    out << line;
  }
  return out.str();
}

}  // namespace poserefine
