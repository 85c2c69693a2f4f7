#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vcnac/audio.hpp"
#include "vcnac/rvq.hpp"

namespace vcnac {

inline constexpr std::size_t kMaxCodebooks = 26;
inline constexpr std::size_t kFirstCodebookBits = 14;  // 16384 entries
inline constexpr std::size_t kOtherCodebookBits = 12;  // 4096 entries
inline constexpr std::size_t kStreamHeaderBytes = 23;

// "VCNB" stream, integers little-endian:
//   "VCNB" | version:u8 | sample_rate:u32 | source_layout:u8 | n_codebooks:u8 |
//   n_frames:u32 | config_digest:8 bytes | payload
// Payload: per frame 14 bits for codebook 0 then 12 bits for each further
// codebook, MSB first, frames back to back, last byte zero padded.
struct StreamHeader {
    static constexpr std::uint8_t kVersion = 1;

    std::uint32_t sample_rate = kCodecSampleRate;
    ChannelLayout source_layout = ChannelLayout::Mono;
    std::uint8_t n_codebooks = 26;
    std::uint32_t n_frames = 0;
    std::uint64_t config_digest = 0;

    friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

std::size_t bits_per_frame(std::size_t n_codebooks);
std::size_t codebook_bits(std::size_t stage);
// Bits per second at the given frame rate.
double bitrate(std::size_t n_codebooks, double frame_rate_hz = 25.0);
std::size_t payload_bytes(std::size_t n_frames, std::size_t n_codebooks);

// MSB-first bit writer/reader.
class BitWriter {
public:
    void write(std::uint32_t value, std::size_t width);
    std::vector<std::uint8_t> finish();  // zero-pads the final byte
    std::size_t bit_count() const noexcept { return bits_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t bits_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    std::uint32_t read(std::size_t width);
    std::size_t position() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// The header's n_frames and n_codebooks are taken from `codes`.
std::vector<std::uint8_t> pack(const CodeIndices& codes, const StreamHeader& header);

struct UnpackedStream {
    StreamHeader header;
    CodeIndices codes;
};

// When expected_digest is set, a different digest in the header is a ConfigError.
UnpackedStream unpack(std::span<const std::uint8_t> bytes, std::optional<std::uint64_t> expected_digest = std::nullopt);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace vcnac
