#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcnac {

inline constexpr int kCodecSampleRate = 48000;

enum class ChannelLayout : std::uint8_t { Mono = 0, Stereo = 1, Surround51 = 2 };

// Surround51 order is L, R, C, LFE, Ls, Rs.
enum Surround51Channel : std::size_t { kL = 0, kR = 1, kC = 2, kLfe = 3, kLs = 4, kRs = 5 };

int channel_count(ChannelLayout layout) noexcept;
ChannelLayout layout_for_channels(int channels);  // throws FormatError for 3,4,5,7+...
std::string_view layout_name(ChannelLayout layout) noexcept;
ChannelLayout parse_layout(std::string_view name);  // "mono" | "stereo" | "surround51"

// Multichannel float audio. Channel count always matches the layout and all
// channels share one frame count; both are checked at construction.
class AudioBuffer {
public:
    AudioBuffer() = default;
    AudioBuffer(int sample_rate, ChannelLayout layout, std::vector<std::vector<float>> channels);

    // Zero-filled buffer.
    static AudioBuffer silence(int sample_rate, ChannelLayout layout, std::size_t frames);

    int sample_rate() const noexcept { return sample_rate_; }
    ChannelLayout layout() const noexcept { return layout_; }
    int channels() const noexcept { return channel_count(layout_); }
    std::size_t frames() const noexcept { return channels_.empty() ? 0 : channels_.front().size(); }
    double duration_seconds() const noexcept {
        return sample_rate_ > 0 ? static_cast<double>(frames()) / sample_rate_ : 0.0;
    }

    std::span<const float> channel(std::size_t c) const { return channels_.at(c); }
    const std::vector<std::vector<float>>& data() const noexcept { return channels_; }

    friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

private:
    int sample_rate_ = kCodecSampleRate;
    ChannelLayout layout_ = ChannelLayout::Mono;
    std::vector<std::vector<float>> channels_{std::vector<float>{}};
};

// RIFF/WAVE with 1, 2 or 6 channels; PCM16, PCM24 or IEEE float32. Integer
// samples are scaled by 1/2^(bits-1).
AudioBuffer read_wav(const std::string& path);
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

// Always writes IEEE float32, so read_wav(write_wav(b)) == b bit for bit.
void write_wav(const AudioBuffer& buffer, const std::string& path);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer);

// Consecutive non-overlapping chunks of round(chunk_seconds * rate) frames;
// the trailing partial chunk is dropped.
std::vector<AudioBuffer> chunk(const AudioBuffer& buffer, double chunk_seconds);

}  // namespace vcnac
