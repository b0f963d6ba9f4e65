#include "qmem/tagstream.hpp"

#include "qmem/errors.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace qmem::tagstream {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'T', 'A', 'G'};

template <class T>
void put_le(char* dst, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
}

template <class T>
T get_le(const char* src) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[i])) << (8 * i);
    return static_cast<T>(v);
}

}  // namespace

void write_tag_stream(std::span<const TimeTag> tags, std::uint64_t rep_period_fs, const std::string& path) {
    if (rep_period_fs == 0) throw DomainError("repetition period must be > 0");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    std::array<char, kHeaderBytes> header{};
    std::memcpy(header.data(), kMagic.data(), 4);
    put_le<std::uint32_t>(header.data() + 4, kVersion);
    put_le<std::uint64_t>(header.data() + 8, rep_period_fs);
    put_le<std::uint64_t>(header.data() + 16, tags.size());
    out.write(header.data(), header.size());

    std::vector<char> buf;
    buf.reserve(kRecordBytes * 4096);
    auto flush = [&] {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
    };
    for (const TimeTag& t : tags) {
        std::array<char, kRecordBytes> rec{};
        put_le<std::uint64_t>(rec.data(), t.time_fs);
        put_le<std::uint32_t>(rec.data() + 8, static_cast<std::uint32_t>(t.pulse_index));
        rec[12] = static_cast<char>(t.channel);
        rec[13] = static_cast<char>(t.flags);
        buf.insert(buf.end(), rec.begin(), rec.end());
        if (buf.size() >= kRecordBytes * 4096) flush();
    }
    flush();
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_tag_stream(const TagFile& file, const std::string& path) {
    write_tag_stream(file.tags, file.rep_period_fs, path);
}

TagFile read_tag_stream(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::array<char, kHeaderBytes> header{};
    in.read(header.data(), header.size());
    if (in.gcount() != static_cast<std::streamsize>(header.size())) throw FormatError("truncated header");
    if (std::memcmp(header.data(), kMagic.data(), 4) != 0) throw FormatError("bad magic");
    if (get_le<std::uint32_t>(header.data() + 4) != kVersion) throw FormatError("unsupported version");
    TagFile file;
    file.rep_period_fs = get_le<std::uint64_t>(header.data() + 8);
    if (file.rep_period_fs == 0) throw FormatError("zero repetition period");
    const auto count = get_le<std::uint64_t>(header.data() + 16);

    std::array<char, kRecordBytes> rec{};
    for (std::uint64_t k = 0; k < count; ++k) {
        in.read(rec.data(), rec.size());
        if (in.gcount() != static_cast<std::streamsize>(rec.size())) throw FormatError("truncated record");
        TimeTag t;
        t.time_fs = get_le<std::uint64_t>(rec.data());
        t.pulse_index = t.time_fs / file.rep_period_fs;
        if (static_cast<std::uint32_t>(t.pulse_index) != get_le<std::uint32_t>(rec.data() + 8)) {
            throw FormatError("pulse index inconsistent with time");
        }
        const auto channel = static_cast<std::uint8_t>(rec[12]);
        if (channel >= kChannelCount) throw FormatError("bad channel");
        t.channel = static_cast<Channel>(channel);
        t.flags = static_cast<std::uint8_t>(rec[13]);
        file.tags.push_back(t);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after records");
    return file;
}

}  // namespace qmem::tagstream
