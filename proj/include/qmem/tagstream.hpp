#pragma once

// Binary time-tag files. Little-endian: 24-byte header ("PTAG", u32 version,
// u64 rep_period_fs, u64 record_count) followed by 16-byte records
// (u64 time_fs, u32 pulse_low, u8 channel, u8 flags, u16 reserved).

#include "qmem/timetag.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qmem::tagstream {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 24;
inline constexpr std::size_t kRecordBytes = 16;

struct TagFile {
    std::uint64_t rep_period_fs = 0;
    std::vector<TimeTag> tags;

    bool operator==(const TagFile&) const = default;
};

void write_tag_stream(std::span<const TimeTag> tags, std::uint64_t rep_period_fs, const std::string& path);
void write_tag_stream(const TagFile& file, const std::string& path);

/// Pulse indices are reconstructed from time / rep_period_fs and checked
/// against the stored low 32 bits. Throws FormatError.
TagFile read_tag_stream(const std::string& path);

}  // namespace qmem::tagstream
