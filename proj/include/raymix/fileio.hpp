// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace raymix::io {

/// Writes `bytes` to a temporary sibling of `path` and renames it into place, so a
/// reader never observes a partial file. Throws std::runtime_error on failure.
void write_atomic(const std::filesystem::path &path, std::string_view bytes);

/// Same, for writers that need a path (e.g. libpng). `writer` receives the temporary path.
void write_atomic_with(const std::filesystem::path &path,
                       const std::function<void(const std::filesystem::path &)> &writer);

/// Whole-file read; throws std::runtime_error if the file cannot be opened.
std::string read_file(const std::filesystem::path &path);

} // namespace raymix::io
