// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/image.hpp"

#include <cmath>

#include "poserefine/error.hpp"

namespace poserefine {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw DataError("image dimensions must be >= 1");
  data_.resize(static_cast<size_t>(width) * height * 3);
  for (size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

void check_image(const Image& img) {
  if (img.width() < 1 || img.height() < 1) throw DataError("image is empty");
  for (double v : img.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("image value outside [0, 1]");
  }
}

}  // namespace poserefine
