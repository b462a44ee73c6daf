// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/error.hpp"
#include "raymix/field.hpp"
#include "raymix/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace raymix::ckpt {

inline constexpr char kMagic[8] = {'R', 'A', 'Y', 'M', 'I', 'X', 'C', 'K'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class Errc {
    Io,
    BadMagic,
    VersionMismatch,
    Truncated,
    ArchitectureMismatch,
    Corrupt,
};

std::string_view errc_name(Errc e);

class CheckpointError : public DataError {
public:
    CheckpointError(Errc code, const std::string &what) : DataError(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

struct Checkpoint {
    field::FieldParams params;
    optim::OptimizerState state;
    /// Effective training configuration as JSON text; stored verbatim.
    std::string config_json;
};

/// Little-endian layout: magic, u32 version, architecture record, u64 n + n f64 parameters,
/// i64 optimizer step, u64 n' + 2n' f64 moments (n' is 0 or n), u64 length + config text.
std::string serialize(const Checkpoint &c);

/// Throws CheckpointError. With `expected` set, a checkpoint of any other architecture
/// is rejected with both shapes named in the message.
Checkpoint deserialize(std::string_view bytes, const field::Architecture *expected = nullptr);

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &c);
Checkpoint load_checkpoint(const std::filesystem::path &path, const field::Architecture *expected = nullptr);

} // namespace raymix::ckpt
