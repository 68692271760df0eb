// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace poserefine {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: schema violations, broken invariants, missing files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during training or inference.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace poserefine
