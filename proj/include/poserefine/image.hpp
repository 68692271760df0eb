// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace poserefine {

using Rgb = std::array<double, 3>;

// Three-channel image with values in [0, 1], stored row-major and
// channel-interleaved. Pixel (x, y) covers [x, x+1) x [y, y+1) in the
// continuous image coordinates used by keypoints and boxes.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {0.0, 0.0, 0.0});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  Rgb pixel(int x, int y) const {
    const size_t i = index(x, y, 0);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set_pixel(int x, int y, const Rgb& v) {
    const size_t i = index(x, y, 0);
    data_[i] = v[0];
    data_[i + 1] = v[1];
    data_[i + 2] = v[2];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  size_t index(int x, int y, int c) const {
    return (static_cast<size_t>(y) * width_ + x) * 3 + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Binary per-pixel mask, row-major.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), bits(static_cast<size_t>(w) * h, 0) {}

  bool get(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y) { bits[static_cast<size_t>(y) * width + x] = 1; }
};

// Throws DataError when dimensions are invalid or a value leaves [0, 1].
void check_image(const Image& img);

}  // namespace poserefine
