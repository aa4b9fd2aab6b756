#ifndef CRYOREDUCE_SRC_BINARY_IO_HPP
#define CRYOREDUCE_SRC_BINARY_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "cryoreduce/errors.hpp"

namespace cryoreduce::io {

constexpr bool host_little_endian() {
    return std::endian::native == std::endian::little;
}

inline std::uint16_t bswap16(std::uint16_t v) { return static_cast<std::uint16_t>((v >> 8) | (v << 8)); }
inline std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}
inline std::uint64_t bswap64(std::uint64_t v) {
    return (static_cast<std::uint64_t>(bswap32(static_cast<std::uint32_t>(v))) << 32) |
           bswap32(static_cast<std::uint32_t>(v >> 32));
}

// Little-endian float64 vector file, the raw format the datastore and raw
// ingest share.
inline void write_f64_le(const std::filesystem::path& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    if (host_little_endian()) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        for (double v : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            bits = bswap64(bits);
            out.write(reinterpret_cast<const char*>(&bits), 8);
        }
    }
    if (!out) throw IoError("short write: " + path.string());
}

inline std::vector<double> read_f64_le(const std::filesystem::path& path,
                                       std::uint64_t byte_offset, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    in.seekg(static_cast<std::streamoff>(byte_offset));
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
        throw IoError("short read: " + path.string());
    if (!host_little_endian()) {
        for (double& v : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            bits = bswap64(bits);
            std::memcpy(&v, &bits, 8);
        }
    }
    return values;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write: " + path.string());
}

}  // namespace cryoreduce::io

#endif
