// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/fileio.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace raymix::io {
namespace fs = std::filesystem;

namespace {

fs::path temp_sibling(const fs::path &path) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    return tmp;
}

} // namespace

void write_atomic_with(const fs::path &path, const std::function<void(const fs::path &)> &writer) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    const fs::path tmp = temp_sibling(path);
    try {
        writer(tmp);
        fs::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

void write_atomic(const fs::path &path, std::string_view bytes) {
    write_atomic_with(path, [&](const fs::path &tmp) {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw std::runtime_error("write failed: " + tmp.string());
    });
}

std::string read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace raymix::io
