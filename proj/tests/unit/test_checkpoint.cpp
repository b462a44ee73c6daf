// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/checkpoint.hpp"
#include "raymix/error.hpp"
#include "raymix/fileio.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

using namespace raymix;
using namespace raymix::ckpt;

namespace {

field::Architecture arch() {
    field::Architecture a;
    a.encoding = {2, 1};
    a.depth = 2;
    a.width = 8;
    a.bottleneck = 4;
    a.view_width = 6;
    return a;
}

Checkpoint sample() {
    Checkpoint c;
    c.params = field::FieldParams::initialize(arch(), 3);
    c.state = optim::OptimizerState::zeros(c.params.size());
    for (std::size_t i = 0; i < c.state.size(); ++i) {
        c.state.m[i] = 1e-3 * static_cast<double>(i) - 0.1;
        c.state.v[i] = 1e-7 * static_cast<double>(i * i);
    }
    c.state.step = 1234;
    c.config_json = "{\"train.seed\": 7}\n";
    return c;
}

Errc code_of(std::string_view bytes, const field::Architecture *expected = nullptr) {
    try {
        deserialize(bytes, expected);
    } catch (const CheckpointError &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return Errc::Io;
}

} // namespace

TEST(Checkpoint, RoundTripIsBitwise) {
    const Checkpoint c = sample();
    const std::string bytes = serialize(c);
    const Checkpoint d = deserialize(bytes);
    EXPECT_EQ(d.params.architecture(), c.params.architecture());
    ASSERT_EQ(d.params.size(), c.params.size());
    EXPECT_EQ(std::memcmp(d.params.values().data(), c.params.values().data(), c.params.size() * sizeof(double)), 0);
    EXPECT_EQ(d.state.m, c.state.m);
    EXPECT_EQ(d.state.v, c.state.v);
    EXPECT_EQ(d.state.step, 1234);
    EXPECT_EQ(d.config_json, c.config_json);
    EXPECT_EQ(serialize(d), bytes);
}

TEST(Checkpoint, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "raymix_ckpt_test";
    std::filesystem::remove_all(dir);
    const Checkpoint c = sample();
    save_checkpoint(dir / "sub" / "c.bin", c);
    const auto a = arch();
    const Checkpoint d = load_checkpoint(dir / "sub" / "c.bin", &a);
    EXPECT_EQ(serialize(d), serialize(c));
    for (const auto &e : std::filesystem::directory_iterator(dir / "sub"))
        EXPECT_EQ(e.path().filename(), "c.bin") << "stray temporary file";
    try {
        load_checkpoint(dir / "missing.bin");
        FAIL();
    } catch (const CheckpointError &e) {
        EXPECT_EQ(e.code(), Errc::Io);
    }
    std::filesystem::remove_all(dir);
}

TEST(Checkpoint, CorruptionIsClassified) {
    const std::string bytes = serialize(sample());
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_EQ(code_of(bad), Errc::BadMagic);
    bad = bytes;
    bad[8] = 9;  // version field follows the magic
    EXPECT_EQ(code_of(bad), Errc::VersionMismatch);
    EXPECT_EQ(code_of(bytes.substr(0, bytes.size() - 5)), Errc::Truncated);
    EXPECT_EQ(code_of(bytes.substr(0, 4)), Errc::Truncated);
    EXPECT_EQ(code_of(bytes + "junk"), Errc::Corrupt);
}

TEST(Checkpoint, ArchitectureMismatchNamesBothShapes) {
    const std::string bytes = serialize(sample());
    field::Architecture other = arch();
    other.width = 16;
    try {
        deserialize(bytes, &other);
        FAIL();
    } catch (const CheckpointError &e) {
        EXPECT_EQ(e.code(), Errc::ArchitectureMismatch);
        const std::string msg = e.what();
        EXPECT_NE(msg.find(arch().describe()), std::string::npos);
        EXPECT_NE(msg.find(other.describe()), std::string::npos);
    }
}
