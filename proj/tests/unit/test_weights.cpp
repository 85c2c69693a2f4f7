#include <doctest.h>

#include <filesystem>

#include "vcnac/error.hpp"
#include "vcnac/weights.hpp"

using namespace vcnac;
using namespace vcnac::nn;

namespace {
WeightStore sample_store() {
    WeightStore s(0x1234);
    s.insert("a", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    s.insert("b.c", Tensor({4}, {-1, 0.5f, 0, 7}));
    return s;
}
}  // namespace

TEST_CASE("VCNW serialize/deserialize roundtrip") {
    const auto s = sample_store();
    const auto bytes = s.serialize();
    CHECK(bytes[0] == 'V');
    CHECK(WeightStore::deserialize(bytes) == s);
    CHECK(s.parameter_count() == 10);
    CHECK(WeightStore::deserialize(bytes).digest() == s.digest());
    const auto path = (std::filesystem::temp_directory_path() / "vcnac_w.vcnw").string();
    save_weights(s, path);
    CHECK(load_weights(path) == s);
    std::filesystem::remove(path);
}

TEST_CASE("VCNW rejects corrupt input") {
    auto bytes = sample_store().serialize();
    auto bad_magic = bytes;
    bad_magic[1] = 'X';
    CHECK_THROWS_AS(WeightStore::deserialize(bad_magic), FormatError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(WeightStore::deserialize(bad_version), FormatError);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(WeightStore::deserialize(truncated), FormatError);
    auto extended = bytes;
    extended.push_back(0);
    CHECK_THROWS_AS(WeightStore::deserialize(extended), FormatError);
}

TEST_CASE("missing tensor is a ConfigError") {
    const auto s = sample_store();
    CHECK_THROWS_AS(s.at("nope"), ConfigError);
}

TEST_CASE("digest tracks content") {
    auto s = sample_store();
    const auto d = s.digest();
    s.at("a")[0] = 1.5f;
    CHECK(s.digest() != d);
}
