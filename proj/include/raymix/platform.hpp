// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace raymix {

/// Keeps large per-step tape buffers on the heap instead of fresh mmap'd pages.
/// Process-wide; call once from main before training. No-op outside glibc.
void tune_allocator();

} // namespace raymix
