#include "vcnac/bitstream.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "vcnac/error.hpp"

namespace vcnac {

std::size_t bits_per_frame(std::size_t n_codebooks) {
    if (n_codebooks < 1 || n_codebooks > kMaxCodebooks) {
        throw InputError("number of codebooks must be in [1, 26], got " + std::to_string(n_codebooks));
    }
    return kFirstCodebookBits + kOtherCodebookBits * (n_codebooks - 1);
}

std::size_t codebook_bits(std::size_t stage) { return stage == 0 ? kFirstCodebookBits : kOtherCodebookBits; }

double bitrate(std::size_t n_codebooks, double frame_rate_hz) {
    return static_cast<double>(bits_per_frame(n_codebooks)) * frame_rate_hz;
}

std::size_t payload_bytes(std::size_t n_frames, std::size_t n_codebooks) {
    return (n_frames * bits_per_frame(n_codebooks) + 7) / 8;
}

void BitWriter::write(std::uint32_t value, std::size_t width) {
    if (width < 32 && (value >> width) != 0) {
        throw InputError("value " + std::to_string(value) + " does not fit in " + std::to_string(width) + " bits");
    }
    for (std::size_t i = width; i-- > 0;) {
        if (bits_ % 8 == 0) bytes_.push_back(0);
        if ((value >> i) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
        ++bits_;
    }
}

std::vector<std::uint8_t> BitWriter::finish() {
    bits_ = 0;
    return std::move(bytes_);
}

std::uint32_t BitReader::read(std::size_t width) {
    if (pos_ + width > bytes_.size() * 8) throw FormatError("bit reader ran past the end of the payload");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < width; ++i, ++pos_) {
        v = (v << 1) | ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u);
    }
    return v;
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
    return v;
}

}  // namespace

std::vector<std::uint8_t> pack(const CodeIndices& codes, const StreamHeader& header) {
    const std::size_t n = codes.n_used;
    const std::size_t bpf = bits_per_frame(n);
    if (codes.indices.size() != codes.frames * n) throw InputError("code index array has the wrong size");
    if (codes.frames > 0xFFFFFFFFu) throw InputError("too many frames for a VCNB stream");

    std::vector<std::uint8_t> out;
    out.reserve(kStreamHeaderBytes + payload_bytes(codes.frames, n));
    out.insert(out.end(), {'V', 'C', 'N', 'B'});
    out.push_back(StreamHeader::kVersion);
    put_le<std::uint32_t>(out, header.sample_rate);
    out.push_back(static_cast<std::uint8_t>(header.source_layout));
    out.push_back(static_cast<std::uint8_t>(n));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(codes.frames));
    put_le<std::uint64_t>(out, header.config_digest);

    BitWriter w;
    for (std::size_t t = 0; t < codes.frames; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
            const auto idx = codes.at(t, s);
            if (idx >> codebook_bits(s)) {
                throw InputError("index " + std::to_string(idx) + " at frame " + std::to_string(t) + ", codebook " +
                                 std::to_string(s) + " exceeds its " + std::to_string(codebook_bits(s)) +
                                 "-bit field");
            }
            w.write(idx, codebook_bits(s));
        }
    }
    const auto payload = w.finish();
    if (payload.size() * 8 < codes.frames * bpf) throw InputError("internal: payload shorter than expected");
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

UnpackedStream unpack(std::span<const std::uint8_t> bytes, std::optional<std::uint64_t> expected_digest) {
    if (bytes.size() < kStreamHeaderBytes) {
        throw FormatError("truncated VCNB header: expected " + std::to_string(kStreamHeaderBytes) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    if (std::memcmp(bytes.data(), "VCNB", 4) != 0) throw FormatError("not a VCNB stream (bad magic)");
    if (bytes[4] != StreamHeader::kVersion) throw FormatError("unsupported VCNB version " + std::to_string(bytes[4]));

    UnpackedStream out;
    auto& h = out.header;
    h.sample_rate = get_le<std::uint32_t>(bytes.data() + 5);
    const std::uint8_t layout = bytes[9];
    if (layout > 2) throw FormatError("invalid source layout code " + std::to_string(layout));
    h.source_layout = static_cast<ChannelLayout>(layout);
    h.n_codebooks = bytes[10];
    if (h.n_codebooks < 1 || h.n_codebooks > kMaxCodebooks) {
        throw FormatError("invalid codebook count " + std::to_string(h.n_codebooks));
    }
    h.n_frames = get_le<std::uint32_t>(bytes.data() + 11);
    h.config_digest = get_le<std::uint64_t>(bytes.data() + 15);
    if (expected_digest && *expected_digest != h.config_digest) {
        throw ConfigError("stream config digest does not match the loaded codec config");
    }

    const std::size_t expected = kStreamHeaderBytes + payload_bytes(h.n_frames, h.n_codebooks);
    if (bytes.size() < expected) {
        throw FormatError("truncated VCNB stream: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
        throw FormatError("VCNB stream has trailing data: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    }

    BitReader r(bytes.subspan(kStreamHeaderBytes));
    auto& c = out.codes;
    c.frames = h.n_frames;
    c.n_used = h.n_codebooks;
    c.indices.resize(c.frames * c.n_used);
    for (std::size_t i = 0; i < c.indices.size(); ++i) c.indices[i] = r.read(codebook_bits(i % c.n_used));
    const std::size_t used = r.position();
    const std::size_t total = (expected - kStreamHeaderBytes) * 8;
    if (total > used && r.read(total - used) != 0) throw FormatError("VCNB padding bits are not zero");
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace vcnac
