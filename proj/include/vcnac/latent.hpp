#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vcnac/audio.hpp"

namespace vcnac {

inline constexpr std::size_t kLatentDim = 16;

// T x dim latent frames, row-major. The source layout is metadata only; the
// representation itself does not depend on it.
struct LatentSequence {
    std::size_t frames = 0;
    std::size_t dim = kLatentDim;
    std::vector<float> values;
    ChannelLayout source_layout = ChannelLayout::Mono;

    LatentSequence() = default;
    LatentSequence(std::size_t t, std::size_t d, ChannelLayout layout = ChannelLayout::Mono)
        : frames(t), dim(d), values(t * d, 0.0f), source_layout(layout) {}

    std::span<float> frame(std::size_t t) { return std::span(values).subspan(t * dim, dim); }
    std::span<const float> frame(std::size_t t) const { return std::span(values).subspan(t * dim, dim); }

    friend bool operator==(const LatentSequence&, const LatentSequence&) = default;
};

}  // namespace vcnac
