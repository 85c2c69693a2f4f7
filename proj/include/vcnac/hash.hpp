#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace vcnac {

// 64-bit FNV-1a. Used for config digests and content fingerprints, not for security.
class Fnv1a64 {
public:
    void update(std::span<const std::byte> bytes) noexcept {
        for (std::byte b : bytes) {
            state_ ^= static_cast<std::uint64_t>(b);
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) noexcept { update(std::as_bytes(std::span(s.data(), s.size()))); }
    std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    Fnv1a64 h;
    h.update(s);
    return h.value();
}

}  // namespace vcnac
