// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/patching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poserefine/error.hpp"

namespace poserefine {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kFused: return "fused";
    case Modality::kRgbOnly: return "rgb";
    case Modality::kSegOnly: return "seg";
  }
  return "fused";
}

Modality modality_from_string(const std::string& s) {
  if (s == "fused") return Modality::kFused;
  if (s == "rgb") return Modality::kRgbOnly;
  if (s == "seg") return Modality::kSegOnly;
  throw DataError("unknown modality '" + s + "' (expected fused|rgb|seg)");
}

PatchBox limb_box(const Eigen::Vector2d& kp_a, const Eigen::Vector2d& kp_b,
                  double min_side, double scale) {
  if (!kp_a.allFinite() || !kp_b.allFinite()) {
    throw DataError("limb_box: non-finite keypoint");
  }
  if (!(scale > 0.0) || !(min_side >= 0.0)) {
    throw DataError("limb_box: scale must be positive and min_side non-negative");
  }
  const double w = std::abs(kp_a.x() - kp_b.x());
  const double h = std::abs(kp_a.y() - kp_b.y());
  const double side = std::max(std::max(min_side, h), std::max(min_side, w));
  PatchBox box;
  box.center = 0.5 * (kp_a + kp_b);
  box.side = std::floor(scale * side + 0.5);
  if (!(box.side > 0.0)) throw DataError("limb_box: degenerate box side");
  return box;
}

namespace {

// Source coordinate (continuous) of output sample i along one axis.
inline double sample_coord(double center, double side, int i, int out_res) {
  return center + ((i + 0.5) / out_res - 0.5) * side;
}

}  // namespace

Image crop_resize(const Image& img, const PatchBox& box, int out_res, Resample mode) {
  if (out_res < 1) throw DataError("crop_resize: out_res must be >= 1");
  if (!(box.side > 0.0)) throw DataError("crop_resize: box side must be positive");
  Image out(out_res, out_res);
  const int w = img.width();
  const int h = img.height();
  auto fetch = [&](int x, int y, int c) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return img.at(x, y, c);
  };

  for (int oy = 0; oy < out_res; ++oy) {
    const double sy = sample_coord(box.center.y(), box.side, oy, out_res);
    for (int ox = 0; ox < out_res; ++ox) {
      const double sx = sample_coord(box.center.x(), box.side, ox, out_res);
      if (mode == Resample::kNearest) {
        const int x = static_cast<int>(std::floor(sx));
        const int y = static_cast<int>(std::floor(sy));
        for (int c = 0; c < 3; ++c) out.at(ox, oy, c) = fetch(x, y, c);
      } else {
        // Pixel centers sit at integer + 0.5.
        const double fx = sx - 0.5;
        const double fy = sy - 0.5;
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const double ax = fx - x0;
        const double ay = fy - y0;
        for (int c = 0; c < 3; ++c) {
          const double top = (1.0 - ax) * fetch(x0, y0, c) + ax * fetch(x0 + 1, y0, c);
          const double bot =
              (1.0 - ax) * fetch(x0, y0 + 1, c) + ax * fetch(x0 + 1, y0 + 1, c);
          out.at(ox, oy, c) = (1.0 - ay) * top + ay * bot;
        }
      }
    }
  }
  return out;
}

std::vector<PatchBox> limb_boxes(const Keypoints2D& kps, const SkeletonTopology& topo,
                                 const PatchConfig& cfg) {
  if (kps.joint_count() != topo.joint_count()) {
    throw DataError("keypoint count does not match topology");
  }
  std::vector<PatchBox> boxes;
  boxes.reserve(topo.limb_count());
  for (const Limb& limb : topo.limbs()) {
    boxes.push_back(limb_box(kps.points.row(limb.parent).transpose(),
                             kps.points.row(limb.child).transpose(), cfg.min_side,
                             cfg.scale));
  }
  return boxes;
}

namespace {

void copy_into(const Image& patch, PatchVolume& volume, int first_channel) {
  const int res = volume.res;
  for (int c = 0; c < 3; ++c) {
    double* dst = volume.plane(first_channel + c);
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) dst[y * res + x] = patch.at(x, y, c);
    }
  }
}

}  // namespace

PatchVolume build_volume(const Image& rgb, const Image& seg, const Keypoints2D& kps,
                         const SkeletonTopology& topo, const PatchConfig& cfg) {
  if (rgb.width() != seg.width() || rgb.height() != seg.height()) {
    throw DataError("build_volume: rgb and seg dimensions differ");
  }
  const std::vector<PatchBox> boxes = limb_boxes(kps, topo, cfg);
  PatchVolume volume(6 * topo.limb_count(), cfg.out_res);
  for (int k = 0; k < topo.limb_count(); ++k) {
    copy_into(crop_resize(rgb, boxes[k], cfg.out_res, Resample::kBilinear), volume, 6 * k);
    copy_into(crop_resize(seg, boxes[k], cfg.out_res, Resample::kNearest), volume,
              6 * k + 3);
  }
  return volume;
}

void apply_modality(PatchVolume& volume, Modality modality) {
  if (modality == Modality::kFused) return;
  const int offset = modality == Modality::kRgbOnly ? 3 : 0;
  for (int k = 0; k < volume.limb_count(); ++k) {
    for (int c = 0; c < 3; ++c) {
      double* p = volume.plane(6 * k + offset + c);
      std::fill(p, p + volume.plane_size(), 0.0);
    }
  }
}

Image volume_patch(const PatchVolume& volume, int limb, bool seg) {
  Image out(volume.res, volume.res);
  const int first = 6 * limb + (seg ? 3 : 0);
  for (int c = 0; c < 3; ++c) {
    const double* src = volume.plane(first + c);
    for (int y = 0; y < volume.res; ++y) {
      for (int x = 0; x < volume.res; ++x) out.at(x, y, c) = src[y * volume.res + x];
    }
  }
  return out;
}

Image colorize_segmentation(std::span<const Mask> part_masks, const SegPalette& palette,
                            std::span<const int> depth_order) {
  const int limbs = static_cast<int>(part_masks.size());
  if (limbs == 0) throw DataError("colorize_segmentation: no masks");
  if (static_cast<int>(palette.limb_color.size()) != limbs) {
    throw DataError("colorize_segmentation: palette size does not match mask count");
  }
  const int w = part_masks[0].width;
  const int h = part_masks[0].height;
  for (const Mask& m : part_masks) {
    if (m.width != w || m.height != h) {
      throw DataError("colorize_segmentation: mask dimension mismatch");
    }
  }
  std::vector<int> sorted(depth_order.begin(), depth_order.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(limbs);
  std::iota(expect.begin(), expect.end(), 0);
  if (sorted != expect) {
    throw DataError("colorize_segmentation: depth_order is not a permutation of limbs");
  }

  Image out(w, h, palette.background_color);
  for (int k : depth_order) {
    const Mask& m = part_masks[k];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (m.get(x, y)) out.set_pixel(x, y, palette.limb_color[k]);
      }
    }
  }
  return out;
}

namespace {

Rgb hue_to_rgb(double hue) {
  const double h6 = hue * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double q = 1.0 - f;
  switch (sector) {
    case 0: return {1.0, f, 0.0};
    case 1: return {q, 1.0, 0.0};
    case 2: return {0.0, 1.0, f};
    case 3: return {0.0, q, 1.0};
    case 4: return {f, 0.0, 1.0};
    default: return {1.0, 0.0, q};
  }
}

}  // namespace

SegPalette default_palette(int limb_count) {
  if (limb_count < 1) throw DataError("default_palette: limb_count must be >= 1");
  int stride = std::max(1, (limb_count - 1) / 2);
  while (std::gcd(stride, limb_count) != 1) --stride;
  SegPalette palette;
  for (int k = 0; k < limb_count; ++k) {
    const int slot = (k * stride) % limb_count;
    Rgb c = hue_to_rgb(static_cast<double>(slot) / limb_count);
    for (double& v : c) v = std::round(v * 255.0) / 255.0;
    palette.limb_color.push_back(c);
  }
  return palette;
}

void check_palette(const SegPalette& palette, int limb_count) {
  if (static_cast<int>(palette.limb_color.size()) != limb_count) {
    throw DataError("palette has " + std::to_string(palette.limb_color.size()) +
                    " colors, expected " + std::to_string(limb_count));
  }
  auto in_range = [](const Rgb& c) {
    return std::all_of(c.begin(), c.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
  };
  if (!in_range(palette.background_color)) throw DataError("palette value outside [0, 1]");
  for (size_t i = 0; i < palette.limb_color.size(); ++i) {
    if (!in_range(palette.limb_color[i])) throw DataError("palette value outside [0, 1]");
    if (palette.limb_color[i] == palette.background_color) {
      throw DataError("palette color equals background");
    }
    for (size_t j = i + 1; j < palette.limb_color.size(); ++j) {
      if (palette.limb_color[i] == palette.limb_color[j]) {
        throw DataError("palette colors are not pairwise distinct");
      }
    }
  }
}

}  // namespace poserefine
