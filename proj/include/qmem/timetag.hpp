#pragma once

#include "qmem/config.hpp"

#include <cstdint>

namespace qmem {

namespace tag_flags {
inline constexpr std::uint8_t pair_photon = 1;
inline constexpr std::uint8_t noise_photon = 2;
inline constexpr std::uint8_t dark = 4;
/// Photon retrieved from the memory (V-polarized output channel).
inline constexpr std::uint8_t retrieved = 8;
}  // namespace tag_flags

struct TimeTag {
    std::uint64_t time_fs = 0;
    std::uint64_t pulse_index = 0;
    Channel channel = Channel::herald;
    std::uint8_t flags = 0;

    bool operator==(const TimeTag&) const = default;
};

}  // namespace qmem
