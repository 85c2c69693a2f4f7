#include "vcnac/audio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vcnac/error.hpp"

namespace vcnac {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

int channel_count(ChannelLayout layout) noexcept {
    switch (layout) {
        case ChannelLayout::Mono: return 1;
        case ChannelLayout::Stereo: return 2;
        case ChannelLayout::Surround51: return 6;
    }
    return 0;
}

ChannelLayout layout_for_channels(int channels) {
    switch (channels) {
        case 1: return ChannelLayout::Mono;
        case 2: return ChannelLayout::Stereo;
        case 6: return ChannelLayout::Surround51;
        default: throw FormatError("unsupported channel count " + std::to_string(channels) + " (expected 1, 2 or 6)");
    }
}

std::string_view layout_name(ChannelLayout layout) noexcept {
    switch (layout) {
        case ChannelLayout::Mono: return "mono";
        case ChannelLayout::Stereo: return "stereo";
        case ChannelLayout::Surround51: return "surround51";
    }
    return "?";
}

ChannelLayout parse_layout(std::string_view name) {
    if (name == "mono") return ChannelLayout::Mono;
    if (name == "stereo") return ChannelLayout::Stereo;
    if (name == "surround51" || name == "5.1") return ChannelLayout::Surround51;
    throw InputError("unknown layout '" + std::string(name) + "'");
}

AudioBuffer::AudioBuffer(int sample_rate, ChannelLayout layout, std::vector<std::vector<float>> channels)
    : sample_rate_(sample_rate), layout_(layout), channels_(std::move(channels)) {
    if (sample_rate_ <= 0) throw InputError("sample rate must be positive");
    if (static_cast<int>(channels_.size()) != channel_count(layout_)) {
        throw LayoutError("layout " + std::string(layout_name(layout_)) + " needs " +
                          std::to_string(channel_count(layout_)) + " channels, got " +
                          std::to_string(channels_.size()));
    }
    for (const auto& ch : channels_) {
        if (ch.size() != channels_.front().size()) throw InputError("channels have different frame counts");
    }
}

AudioBuffer AudioBuffer::silence(int sample_rate, ChannelLayout layout, std::size_t frames) {
    return AudioBuffer(sample_rate, layout,
                       std::vector<std::vector<float>>(channel_count(layout), std::vector<float>(frames, 0.0f)));
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12) throw IoError("truncated WAV: missing RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError("not a RIFF/WAVE file");
    }

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
    std::uint32_t rate = 0;
    std::size_t pos = 12;
    while (true) {
        if (pos + 8 > bytes.size()) throw IoError("truncated WAV: no data chunk");
        const std::uint8_t* hdr = bytes.data() + pos;
        const std::uint32_t size = get_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (size < 16 || body + size > bytes.size()) throw IoError("truncated WAV: fmt chunk");
            const std::uint8_t* f = bytes.data() + body;
            format = get_u16(f);
            channels = get_u16(f + 2);
            rate = get_u32(f + 4);
            block_align = get_u16(f + 12);
            bits = get_u16(f + 14);
            if (format == kFormatExtensible) {
                if (size < 40) throw FormatError("WAVE_FORMAT_EXTENSIBLE fmt chunk too short");
                format = get_u16(f + 24);  // first two bytes of the sub-format GUID
            }
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("data chunk before fmt chunk");
            const ChannelLayout layout = layout_for_channels(channels);
            const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24);
            const bool flt = format == kFormatFloat && bits == 32;
            if (!pcm && !flt) {
                throw FormatError("unsupported encoding (format " + std::to_string(format) + ", " +
                                  std::to_string(bits) + " bits)");
            }
            if (rate == 0) throw FormatError("sample rate is zero");
            const std::size_t bytes_per_sample = bits / 8;
            if (block_align != bytes_per_sample * channels) throw FormatError("inconsistent block alignment");
            if (body + size > bytes.size()) throw IoError("truncated WAV: data chunk is shorter than its header claims");
            const std::size_t frames = size / block_align;

            std::vector<std::vector<float>> data(channels, std::vector<float>(frames));
            const std::uint8_t* p = bytes.data() + body;
            for (std::size_t i = 0; i < frames; ++i) {
                for (std::size_t c = 0; c < channels; ++c, p += bytes_per_sample) {
                    float v = 0.0f;
                    if (flt) {
                        std::memcpy(&v, p, 4);
                    } else if (bits == 16) {
                        v = static_cast<float>(static_cast<std::int16_t>(get_u16(p))) / 32768.0f;
                    } else {
                        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
                        if (s & 0x800000) s -= 0x1000000;
                        v = static_cast<float>(s) / 8388608.0f;
                    }
                    data[c][i] = v;
                }
            }
            return AudioBuffer(static_cast<int>(rate), layout, std::move(data));
        }
        pos = body + size + (size & 1u);
    }
}

AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer) {
    const auto channels = static_cast<std::uint32_t>(buffer.channels());
    const auto frames = buffer.frames();
    const std::uint64_t data_bytes = static_cast<std::uint64_t>(frames) * channels * 4;
    if (data_bytes > 0xFFFFFFFFull - 36) throw InputError("buffer too large for a RIFF/WAVE file");

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, kFormatFloat);
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate()));
    put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate()) * channels * 4);
    put_u16(out, static_cast<std::uint16_t>(channels * 4));
    put_u16(out, 32);
    put_tag(out, "data");
    put_u32(out, static_cast<std::uint32_t>(data_bytes));
    for (std::size_t i = 0; i < frames; ++i) {
        for (std::uint32_t c = 0; c < channels; ++c) {
            const auto bits = std::bit_cast<std::uint32_t>(buffer.channel(c)[i]);
            put_u32(out, bits);
        }
    }
    return out;
}

void write_wav(const AudioBuffer& buffer, const std::string& path) {
    const auto bytes = encode_wav(buffer);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<AudioBuffer> chunk(const AudioBuffer& buffer, double chunk_seconds) {
    const double exact = chunk_seconds * buffer.sample_rate();
    if (!(exact >= 1.0)) throw InputError("chunk length must be at least one sample");
    const auto len = static_cast<std::size_t>(std::llround(exact));
    std::vector<AudioBuffer> out;
    const std::size_t n = buffer.frames() / len;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::vector<float>> data;
        for (const auto& ch : buffer.data()) {
            data.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(k * len),
                              ch.begin() + static_cast<std::ptrdiff_t>((k + 1) * len));
        }
        out.emplace_back(buffer.sample_rate(), buffer.layout(), std::move(data));
    }
    return out;
}

}  // namespace vcnac
