// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/checkpoint.hpp"

#include "raymix/fileio.hpp"

#include <bit>
#include <cstring>
#include <type_traits>

namespace raymix::ckpt {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
public:
    template <class T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void put_doubles(std::span<const double> v) {
        put<std::uint64_t>(v.size());
        out_.append(reinterpret_cast<const char *>(v.data()), v.size() * sizeof(double));
    }
    void put_bytes(std::string_view s) {
        put<std::uint64_t>(s.size());
        out_.append(s);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::vector<double> get_doubles() {
        const auto n = get<std::uint64_t>();
        if (n > (in_.size() - pos_) / sizeof(double))
            throw CheckpointError(Errc::Truncated, "checkpoint truncated inside an array of " + std::to_string(n));
        std::vector<double> v(n);
        std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }
    std::string get_bytes() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n)
            throw CheckpointError(Errc::Truncated, "checkpoint truncated at byte " + std::to_string(pos_));
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

void put_architecture(Writer &w, const field::Architecture &a) {
    for (int v : {a.encoding.l_pos, a.encoding.l_dir, a.depth, a.width, a.bottleneck, a.view_width})
        w.put<std::int32_t>(v);
    w.put<double>(a.beta_min);
    w.put<double>(a.sigma_bias);
}

field::Architecture get_architecture(Reader &r) {
    field::Architecture a;
    a.encoding.l_pos = r.get<std::int32_t>();
    a.encoding.l_dir = r.get<std::int32_t>();
    a.depth = r.get<std::int32_t>();
    a.width = r.get<std::int32_t>();
    a.bottleneck = r.get<std::int32_t>();
    a.view_width = r.get<std::int32_t>();
    a.beta_min = r.get<double>();
    a.sigma_bias = r.get<double>();
    if (a.encoding.l_pos < 0 || a.encoding.l_dir < 0 || a.depth < 1 || a.width < 1 || a.bottleneck < 1 ||
        a.view_width < 1 || a.encoding.l_pos > 64 || a.encoding.l_dir > 64 || a.depth > 1024 || a.width > 65536 ||
        a.bottleneck > 65536 || a.view_width > 65536)
        throw CheckpointError(Errc::Corrupt, "checkpoint architecture record is implausible");
    return a;
}

} // namespace

std::string_view errc_name(Errc e) {
    switch (e) {
    case Errc::Io: return "io";
    case Errc::BadMagic: return "bad-magic";
    case Errc::VersionMismatch: return "version-mismatch";
    case Errc::Truncated: return "truncated";
    case Errc::ArchitectureMismatch: return "architecture-mismatch";
    case Errc::Corrupt: return "corrupt";
    }
    return "unknown";
}

std::string serialize(const Checkpoint &c) {
    if (!c.state.m.empty() && (c.state.m.size() != c.params.size() || c.state.v.size() != c.params.size()))
        throw DomainError("checkpoint: optimizer moments do not match the parameter count");
    Writer w;
    for (char ch : kMagic)
        w.put<char>(ch);
    w.put<std::uint32_t>(kFormatVersion);
    put_architecture(w, c.params.architecture());
    w.put_doubles(c.params.values());
    w.put<std::int64_t>(c.state.step);
    w.put<std::uint64_t>(c.state.m.size());
    w.put_doubles(c.state.m);
    w.put_doubles(c.state.v);
    w.put_bytes(c.config_json);
    return w.take();
}

Checkpoint deserialize(std::string_view bytes, const field::Architecture *expected) {
    if (bytes.size() < sizeof(kMagic) && std::memcmp(bytes.data(), kMagic, bytes.size()) == 0)
        throw CheckpointError(Errc::Truncated, "checkpoint truncated inside the magic bytes");
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError(Errc::BadMagic, "not a raymix checkpoint (bad magic bytes)");
    Reader r(bytes.substr(sizeof(kMagic)));
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion)
        throw CheckpointError(Errc::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                         ", this build reads version " +
                                                         std::to_string(kFormatVersion));
    const field::Architecture arch = get_architecture(r);
    if (expected && !(*expected == arch))
        throw CheckpointError(Errc::ArchitectureMismatch, "checkpoint architecture [" + arch.describe() +
                                                              "] does not match expected [" + expected->describe() +
                                                              "]");
    Checkpoint c;
    c.params = field::FieldParams::zeros(arch);
    const std::vector<double> values = r.get_doubles();
    if (values.size() != c.params.size())
        throw CheckpointError(Errc::Corrupt, "checkpoint holds " + std::to_string(values.size()) +
                                                 " parameters, architecture needs " +
                                                 std::to_string(c.params.size()));
    std::copy(values.begin(), values.end(), c.params.values().begin());
    c.state.step = r.get<std::int64_t>();
    const auto moments = r.get<std::uint64_t>();
    c.state.m = r.get_doubles();
    c.state.v = r.get_doubles();
    if (c.state.step < 0 || c.state.m.size() != moments || c.state.v.size() != moments ||
        (moments != 0 && moments != values.size()))
        throw CheckpointError(Errc::Corrupt, "checkpoint optimizer state is inconsistent");
    c.config_json = r.get_bytes();
    if (!r.at_end())
        throw CheckpointError(Errc::Corrupt, "trailing bytes after checkpoint payload");
    return c;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &c) {
    const std::string bytes = serialize(c);
    try {
        io::write_atomic(path, bytes);
    } catch (const std::exception &e) {
        throw CheckpointError(Errc::Io, e.what());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path &path, const field::Architecture *expected) {
    std::string bytes;
    try {
        bytes = io::read_file(path);
    } catch (const std::exception &e) {
        throw CheckpointError(Errc::Io, e.what());
    }
    return deserialize(bytes, expected);
}

} // namespace raymix::ckpt
