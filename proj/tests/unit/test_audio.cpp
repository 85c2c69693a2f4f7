#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "vcnac/audio.hpp"
#include "vcnac/error.hpp"
#include "vcnac/hash.hpp"
#include "vcnac/kv.hpp"
#include "vcnac/rng.hpp"

using namespace vcnac;

namespace {

std::vector<std::uint8_t> pcm_wav(int channels, int bits, std::uint16_t format, const std::vector<std::int32_t>& samples,
                                  int rate = 48000) {
    std::vector<std::uint8_t> out;
    auto u16 = [&](std::uint16_t v) { out.push_back(v & 0xFF); out.push_back(v >> 8); };
    auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF); };
    auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * bits / 8);
    tag("RIFF"); u32(36 + data_bytes); tag("WAVE");
    tag("fmt "); u32(16); u16(format); u16(static_cast<std::uint16_t>(channels)); u32(rate);
    u32(rate * channels * bits / 8); u16(static_cast<std::uint16_t>(channels * bits / 8)); u16(static_cast<std::uint16_t>(bits));
    tag("data"); u32(data_bytes);
    for (auto s : samples)
        for (int b = 0; b < bits / 8; ++b) out.push_back(static_cast<std::uint8_t>((static_cast<std::uint32_t>(s) >> (8 * b)) & 0xFF));
    return out;
}

}  // namespace

TEST_CASE("layout helpers") {
    CHECK(channel_count(ChannelLayout::Mono) == 1);
    CHECK(channel_count(ChannelLayout::Stereo) == 2);
    CHECK(channel_count(ChannelLayout::Surround51) == 6);
    CHECK(layout_for_channels(6) == ChannelLayout::Surround51);
    CHECK_THROWS_AS(layout_for_channels(3), FormatError);
    CHECK(parse_layout("5.1") == ChannelLayout::Surround51);
    CHECK(parse_layout("stereo") == ChannelLayout::Stereo);
    CHECK_THROWS_AS(parse_layout("quad"), InputError);
}

TEST_CASE("AudioBuffer validates channel count and lengths") {
    CHECK_THROWS_AS(AudioBuffer(48000, ChannelLayout::Stereo, {{0.f}}), InputError);
    CHECK_THROWS_AS(AudioBuffer(48000, ChannelLayout::Stereo, {{0.f}, {0.f, 1.f}}), InputError);
    CHECK_THROWS_AS(AudioBuffer(0, ChannelLayout::Mono, {{0.f}}), InputError);
    const auto s = AudioBuffer::silence(48000, ChannelLayout::Surround51, 10);
    CHECK(s.channels() == 6);
    CHECK(s.frames() == 10);
}

TEST_CASE("PCM16 and PCM24 decode scale by 2^(bits-1)") {
    auto a = decode_wav(pcm_wav(1, 16, 1, {0, 16384, -32768}));
    CHECK(a.channel(0)[1] == doctest::Approx(0.5));
    CHECK(a.channel(0)[2] == -1.0f);
    auto b = decode_wav(pcm_wav(2, 24, 1, {4194304, -4194304}));
    CHECK(b.layout() == ChannelLayout::Stereo);
    CHECK(b.channel(0)[0] == 0.5f);
    CHECK(b.channel(1)[0] == -0.5f);
}

TEST_CASE("float32 WAV roundtrip is bit exact") {
    Rng rng(3);
    std::vector<std::vector<float>> ch(6, std::vector<float>(257));
    for (auto& c : ch) for (auto& v : c) v = static_cast<float>(rng.uniform(-1, 1));
    AudioBuffer buf(48000, ChannelLayout::Surround51, ch);
    const auto bytes = encode_wav(buf);
    CHECK(bytes.size() == 44 + 6 * 257 * 4);
    CHECK(decode_wav(bytes) == buf);
    const auto path = (std::filesystem::temp_directory_path() / "vcnac_audio_test.wav").string();
    write_wav(buf, path);
    CHECK(read_wav(path) == buf);
    std::filesystem::remove(path);
}

TEST_CASE("malformed WAV data") {
    auto bytes = pcm_wav(1, 16, 1, {1, 2, 3, 4});
    auto trunc = bytes;
    trunc.resize(trunc.size() - 3);
    CHECK_THROWS_AS(decode_wav(trunc), IoError);
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_wav(bad), FormatError);
    CHECK_THROWS_AS(decode_wav(pcm_wav(1, 8, 1, {1, 2})), FormatError);
    CHECK_THROWS_AS(decode_wav(pcm_wav(3, 16, 1, {1, 2, 3})), FormatError);
}

TEST_CASE("chunking drops the partial tail") {
    AudioBuffer buf(48000, ChannelLayout::Mono, {std::vector<float>(48000 * 2 + 100, 0.25f)});
    const auto parts = chunk(buf, 1.0);
    REQUIRE(parts.size() == 2);
    CHECK(parts[1].frames() == 48000);
    CHECK_THROWS_AS(chunk(buf, 0.0), InputError);
}

TEST_CASE("key=value parsing") {
    const auto kv = parse_key_values("# comment\n a = 1 \n\nb=2,3\n");
    CHECK(kv.at("a") == "1");
    CHECK(parse_int_list("b", kv.at("b")) == std::vector<long long>{2, 3});
    CHECK_THROWS_AS(parse_key_values("novalue\n"), FormatError);
    CHECK_THROWS_AS(parse_double("x", "abc"), InputError);
    CHECK(parse_double("x", format_double(0.1)) == 0.1);
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("rng is deterministic and in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    double sum = 0, sq = 0;
    Rng c(7);
    for (int i = 0; i < 20000; ++i) {
        const double z = c.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / 20000) < 0.03);
    CHECK(sq / 20000 == doctest::Approx(1.0).epsilon(0.05));
}
