#ifndef CRYOREDUCE_MRC_HPP
#define CRYOREDUCE_MRC_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cryoreduce/image.hpp"

namespace cryoreduce {

// MRC2014 layout: fixed 1024-byte header, then NSYMBT bytes of extended
// header, then the raster. Only the fields this loader uses are listed.
//   bytes   0-11   nx, ny, nz        (int32)
//   bytes  12-15   mode              (int32)
//   bytes  92-95   nsymbt            (int32)
//   bytes 208-211  "MAP " magic
//   bytes 212-215  machine stamp     (0x44.. little endian, 0x11.. big endian)
struct MrcHeader {
    std::int32_t nx = 0;
    std::int32_t ny = 0;
    std::int32_t nz = 0;
    std::int32_t mode = 0;
    std::int32_t nsymbt = 0;
    bool big_endian = false;

    static constexpr std::int32_t kModeInt8 = 0;
    static constexpr std::int32_t kModeInt16 = 1;
    static constexpr std::int32_t kModeFloat32 = 2;
    static constexpr std::size_t kHeaderBytes = 1024;
};

// Reads every section of an MRC file as an independent ImageRecord with the
// frame index appended to the id ("<stem>-0007"). Supported modes: 0 (int8),
// 1 (int16), 2 (float32). Byte order is taken from the machine stamp, with a
// dimension-plausibility fallback for files that left the stamp blank.
std::vector<ImageRecord> load_mrc(const std::filesystem::path& path);

// Writes a stack of same-sized images as one MRC file in the requested mode
// and byte order. Used by the synthetic generator and the tests.
void write_mrc(const std::filesystem::path& path,
               const std::vector<ImageRecord>& images,
               std::int32_t mode = MrcHeader::kModeFloat32,
               bool big_endian = false);

}  // namespace cryoreduce

#endif
