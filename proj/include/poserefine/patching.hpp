// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "poserefine/image.hpp"
#include "poserefine/skeleton.hpp"

namespace poserefine {

// Square crop region in continuous image coordinates.
struct PatchBox {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double side = 0.0;

  friend bool operator==(const PatchBox&, const PatchBox&) = default;
};

enum class Resample { kBilinear, kNearest };

struct PatchConfig {
  double min_side = 28.0;
  double scale = 2.3;
  int out_res = 32;
};

// Which halves of each limb's six channels reach the regressor. Excluded
// channels are zeroed, the layout is unchanged.
enum class Modality { kFused, kRgbOnly, kSegOnly };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

// ((N-1) * 6) x res x res, channel-major. For limb k, channels
// [6k, 6k+3) hold the RGB crop and [6k+3, 6k+6) the segmentation crop.
struct PatchVolume {
  int channels = 0;
  int res = 0;
  std::vector<double> values;

  PatchVolume() = default;
  PatchVolume(int channels_, int res_)
      : channels(channels_), res(res_),
        values(static_cast<size_t>(channels_) * res_ * res_, 0.0) {}

  int limb_count() const { return channels / 6; }
  size_t plane_size() const { return static_cast<size_t>(res) * res; }
  double* plane(int c) { return values.data() + c * plane_size(); }
  const double* plane(int c) const { return values.data() + c * plane_size(); }
};

struct SegPalette {
  std::vector<Rgb> limb_color;
  Rgb background_color{0.0, 0.0, 0.0};
};

// Tight box around the two endpoints, padded to at least `min_side` per axis,
// squared to the larger padded side, then scaled and rounded half up. The
// center stays at the endpoint midpoint.
PatchBox limb_box(const Eigen::Vector2d& kp_a, const Eigen::Vector2d& kp_b,
                  double min_side = 28.0, double scale = 2.3);

// Resamples the square `box` of `img` to out_res x out_res. Source pixels
// outside the image read as zero.
Image crop_resize(const Image& img, const PatchBox& box, int out_res, Resample mode);

// Boxes for every limb in canonical order.
std::vector<PatchBox> limb_boxes(const Keypoints2D& kps, const SkeletonTopology& topo,
                                 const PatchConfig& cfg);

PatchVolume build_volume(const Image& rgb, const Image& seg, const Keypoints2D& kps,
                         const SkeletonTopology& topo, const PatchConfig& cfg);

void apply_modality(PatchVolume& volume, Modality modality);

// Extracts limb k's RGB (seg = false) or segmentation patch from a volume.
Image volume_patch(const PatchVolume& volume, int limb, bool seg);

// Painter's algorithm over per-limb masks. `depth_order` lists limb indices
// from farthest to nearest; later entries overwrite earlier ones.
Image colorize_segmentation(std::span<const Mask> part_masks, const SegPalette& palette,
                            std::span<const int> depth_order);

// Evenly spaced fully saturated hues, quantized to 8 bits, with consecutive
// limbs assigned far-apart hues. Background is black.
SegPalette default_palette(int limb_count);

// Throws DataError unless colors are pairwise distinct and distinct from the
// background.
void check_palette(const SegPalette& palette, int limb_count);

}  // namespace poserefine
