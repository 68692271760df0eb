// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace poserefine {

// Worker count: POSEREFINE_THREADS when set to a positive integer, otherwise
// the hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks; callers
// write results into per-index slots and reduce in index order, so output
// never depends on the thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace poserefine
