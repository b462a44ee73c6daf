// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace raymix {

/// Precondition violation on a public operation (bad sizes, negative density, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Unknown profile, unknown override key, malformed option value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scene ingestion failure. `frame` is the offending frame index, or -1 for manifest-level errors.
class DataError : public std::runtime_error {
public:
    DataError(const std::string &what, long frame = -1)
        : std::runtime_error(frame >= 0 ? what + " (frame " + std::to_string(frame) + ")" : what),
          frame_(frame) {}
    long frame() const noexcept { return frame_; }

private:
    long frame_;
};

/// A non-finite value where a finite one was required. `index` locates it
/// (parameter index, ray index, ...) or is -1 when not applicable.
class NumericFault : public std::runtime_error {
public:
    NumericFault(const std::string &what, long index = -1)
        : std::runtime_error(index >= 0 ? what + " at index " + std::to_string(index) : what),
          index_(index) {}
    long index() const noexcept { return index_; }

private:
    long index_;
};

/// Process exit codes shared by the command line tool.
enum class ExitCode : int {
    Ok = 0,
    Config = 2,
    Data = 3,
    Numeric = 4,
    Verification = 5,
};

} // namespace raymix
