#include "cryoreduce/mrc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"

namespace cryoreduce {

namespace {

constexpr std::size_t kNx = 0;        // byte offsets of the fields we use
constexpr std::size_t kNy = 4;
constexpr std::size_t kNz = 8;
constexpr std::size_t kMode = 12;
constexpr std::size_t kMxyz = 28;
constexpr std::size_t kCellA = 40;
constexpr std::size_t kCellB = 52;
constexpr std::size_t kMapCRS = 64;
constexpr std::size_t kDmin = 76;
constexpr std::size_t kNsymbt = 92;
constexpr std::size_t kNversion = 108;
constexpr std::size_t kMapMagic = 208;
constexpr std::size_t kMachst = 212;
constexpr std::size_t kRms = 216;
constexpr std::size_t kNlabl = 220;
constexpr std::size_t kLabels = 224;

std::size_t element_size(std::int32_t mode) {
    switch (mode) {
        case MrcHeader::kModeInt8: return 1;
        case MrcHeader::kModeInt16: return 2;
        case MrcHeader::kModeFloat32: return 4;
        default: return 0;
    }
}

std::int32_t get_i32(const unsigned char* base, std::size_t offset, bool big_endian) {
    std::uint32_t bits;
    std::memcpy(&bits, base + offset, 4);
    if (io::host_little_endian() == big_endian) bits = io::bswap32(bits);
    std::int32_t value;
    std::memcpy(&value, &bits, 4);
    return value;
}

void put_i32(unsigned char* base, std::size_t offset, std::int32_t value, bool big_endian) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    if (io::host_little_endian() == big_endian) bits = io::bswap32(bits);
    std::memcpy(base + offset, &bits, 4);
}

void put_f32(unsigned char* base, std::size_t offset, float value, bool big_endian) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    if (io::host_little_endian() == big_endian) bits = io::bswap32(bits);
    std::memcpy(base + offset, &bits, 4);
}

bool plausible(std::int32_t nx, std::int32_t ny, std::int32_t nz, std::int32_t mode) {
    const auto in_range = [](std::int32_t v) { return v >= 1 && v <= 100000000; };
    return in_range(nx) && in_range(ny) && in_range(nz) && element_size(mode) != 0;
}

MrcHeader parse_header(const unsigned char* raw, const std::filesystem::path& path) {
    MrcHeader h;
    const unsigned char stamp = raw[kMachst];
    if (stamp == 0x44) {
        h.big_endian = false;
    } else if (stamp == 0x11) {
        h.big_endian = true;
    } else {
        // Stamp left blank by the writer; pick the byte order whose header
        // fields look like a real image stack.
        const bool le_ok = plausible(get_i32(raw, kNx, false), get_i32(raw, kNy, false),
                                     get_i32(raw, kNz, false), get_i32(raw, kMode, false));
        const bool be_ok = plausible(get_i32(raw, kNx, true), get_i32(raw, kNy, true),
                                     get_i32(raw, kNz, true), get_i32(raw, kMode, true));
        if (!le_ok && !be_ok)
            throw FormatError("unrecognized machine stamp and implausible dimensions: " +
                              path.string());
        h.big_endian = !le_ok;
    }
    h.nx = get_i32(raw, kNx, h.big_endian);
    h.ny = get_i32(raw, kNy, h.big_endian);
    h.nz = get_i32(raw, kNz, h.big_endian);
    h.mode = get_i32(raw, kMode, h.big_endian);
    h.nsymbt = get_i32(raw, kNsymbt, h.big_endian);
    return h;
}

std::string frame_id(const std::filesystem::path& path, std::size_t section) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "-%04zu", section);
    return path.stem().string() + suffix;
}

}  // namespace

std::vector<ImageRecord> load_mrc(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    in.seekg(0, std::ios::end);
    const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);

    if (file_size < MrcHeader::kHeaderBytes)
        throw FormatError("file shorter than the 1024-byte MRC header: " + path.string());
    unsigned char raw[MrcHeader::kHeaderBytes];
    in.read(reinterpret_cast<char*>(raw), MrcHeader::kHeaderBytes);

    const MrcHeader h = parse_header(raw, path);
    if (h.nx < 1 || h.ny < 1 || h.nz < 1)
        throw FormatError("non-positive dimensions in MRC header: " + path.string());
    const std::size_t elem = element_size(h.mode);
    if (elem == 0)
        throw FormatError("unsupported MRC mode " + std::to_string(h.mode) + ": " +
                          path.string());
    if (h.nsymbt < 0)
        throw FormatError("negative NSYMBT in MRC header: " + path.string());

    const std::uint64_t section_bytes =
        static_cast<std::uint64_t>(h.nx) * static_cast<std::uint64_t>(h.ny) * elem;
    const std::uint64_t data_start =
        MrcHeader::kHeaderBytes + static_cast<std::uint64_t>(h.nsymbt);
    const std::uint64_t declared_end =
        data_start + section_bytes * static_cast<std::uint64_t>(h.nz);
    if (declared_end > file_size)
        throw FormatError("truncated MRC file (declares " + std::to_string(declared_end) +
                          " bytes, has " + std::to_string(file_size) + "): " + path.string());

    in.seekg(static_cast<std::streamoff>(data_start));
    const bool swap = (io::host_little_endian() == h.big_endian);
    const std::size_t pixels_per_section =
        static_cast<std::size_t>(h.nx) * static_cast<std::size_t>(h.ny);

    std::vector<ImageRecord> records;
    records.reserve(static_cast<std::size_t>(h.nz));
    std::vector<unsigned char> buf(section_bytes);
    for (std::int32_t z = 0; z < h.nz; ++z) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(section_bytes));
        if (!in) throw IoError("short read in section " + std::to_string(z) + ": " + path.string());

        ImageRecord rec;
        rec.id = frame_id(path, static_cast<std::size_t>(z));
        rec.width = static_cast<std::size_t>(h.nx);
        rec.height = static_cast<std::size_t>(h.ny);
        rec.source = path.string();
        rec.frame = z;
        rec.source_bytes = static_cast<std::int64_t>(section_bytes);
        rec.pixels.resize(pixels_per_section);

        switch (h.mode) {
            case MrcHeader::kModeInt8: {
                const auto* p = reinterpret_cast<const signed char*>(buf.data());
                for (std::size_t i = 0; i < pixels_per_section; ++i)
                    rec.pixels[i] = static_cast<double>(p[i]);
                break;
            }
            case MrcHeader::kModeInt16: {
                for (std::size_t i = 0; i < pixels_per_section; ++i) {
                    std::uint16_t bits;
                    std::memcpy(&bits, buf.data() + 2 * i, 2);
                    if (swap) bits = io::bswap16(bits);
                    std::int16_t value;
                    std::memcpy(&value, &bits, 2);
                    rec.pixels[i] = static_cast<double>(value);
                }
                break;
            }
            case MrcHeader::kModeFloat32: {
                for (std::size_t i = 0; i < pixels_per_section; ++i) {
                    std::uint32_t bits;
                    std::memcpy(&bits, buf.data() + 4 * i, 4);
                    if (swap) bits = io::bswap32(bits);
                    float value;
                    std::memcpy(&value, &bits, 4);
                    if (!std::isfinite(value))
                        throw FormatError("non-finite pixel in section " + std::to_string(z) +
                                          ": " + path.string());
                    rec.pixels[i] = static_cast<double>(value);
                }
                break;
            }
            default:
                throw FormatError("unsupported MRC mode " + std::to_string(h.mode));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_mrc(const std::filesystem::path& path, const std::vector<ImageRecord>& images,
               std::int32_t mode, bool big_endian) {
    if (images.empty()) throw ValidationError("cannot write an empty MRC stack");
    const std::size_t elem = element_size(mode);
    if (elem == 0) throw ValidationError("unsupported MRC write mode " + std::to_string(mode));
    const std::size_t nx = images.front().width;
    const std::size_t ny = images.front().height;
    for (const auto& img : images) {
        validate_image(img);
        if (img.width != nx || img.height != ny)
            throw ValidationError("mixed image dimensions in MRC stack at '" + img.id + "'");
    }

    double dmin = images[0].pixels[0], dmax = dmin, sum = 0.0;
    std::size_t count = 0;
    for (const auto& img : images) {
        for (double v : img.pixels) {
            dmin = std::min(dmin, v);
            dmax = std::max(dmax, v);
            sum += v;
            ++count;
        }
    }
    const double dmean = sum / static_cast<double>(count);

    unsigned char raw[MrcHeader::kHeaderBytes];
    std::memset(raw, 0, sizeof(raw));
    put_i32(raw, kNx, static_cast<std::int32_t>(nx), big_endian);
    put_i32(raw, kNy, static_cast<std::int32_t>(ny), big_endian);
    put_i32(raw, kNz, static_cast<std::int32_t>(images.size()), big_endian);
    put_i32(raw, kMode, mode, big_endian);
    put_i32(raw, kMxyz + 0, static_cast<std::int32_t>(nx), big_endian);
    put_i32(raw, kMxyz + 4, static_cast<std::int32_t>(ny), big_endian);
    put_i32(raw, kMxyz + 8, static_cast<std::int32_t>(images.size()), big_endian);
    put_f32(raw, kCellA + 0, static_cast<float>(nx), big_endian);    // 1 A / pixel
    put_f32(raw, kCellA + 4, static_cast<float>(ny), big_endian);
    put_f32(raw, kCellA + 8, static_cast<float>(images.size()), big_endian);
    put_f32(raw, kCellB + 0, 90.0f, big_endian);
    put_f32(raw, kCellB + 4, 90.0f, big_endian);
    put_f32(raw, kCellB + 8, 90.0f, big_endian);
    put_i32(raw, kMapCRS + 0, 1, big_endian);
    put_i32(raw, kMapCRS + 4, 2, big_endian);
    put_i32(raw, kMapCRS + 8, 3, big_endian);
    put_f32(raw, kDmin + 0, static_cast<float>(dmin), big_endian);
    put_f32(raw, kDmin + 4, static_cast<float>(dmax), big_endian);
    put_f32(raw, kDmin + 8, static_cast<float>(dmean), big_endian);
    put_i32(raw, kNsymbt, 0, big_endian);
    put_i32(raw, kNversion, 20140, big_endian);
    std::memcpy(raw + kMapMagic, "MAP ", 4);
    if (big_endian) {
        raw[kMachst] = 0x11;
        raw[kMachst + 1] = 0x11;
    } else {
        raw[kMachst] = 0x44;
        raw[kMachst + 1] = 0x44;
    }
    put_f32(raw, kRms, -1.0f, big_endian);  // not computed
    put_i32(raw, kNlabl, 1, big_endian);
    static const char kLabel[] = "cryoreduce stack";
    std::memcpy(raw + kLabels, kLabel, sizeof(kLabel) - 1);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(raw), sizeof(raw));

    const bool swap = (io::host_little_endian() == big_endian);
    std::vector<unsigned char> buf(nx * ny * elem);
    for (const auto& img : images) {
        switch (mode) {
            case MrcHeader::kModeInt8: {
                auto* p = reinterpret_cast<signed char*>(buf.data());
                for (std::size_t i = 0; i < img.pixels.size(); ++i) {
                    const double v = std::clamp(std::nearbyint(img.pixels[i]), -128.0, 127.0);
                    p[i] = static_cast<signed char>(v);
                }
                break;
            }
            case MrcHeader::kModeInt16: {
                for (std::size_t i = 0; i < img.pixels.size(); ++i) {
                    const double v = std::clamp(std::nearbyint(img.pixels[i]), -32768.0, 32767.0);
                    auto value = static_cast<std::int16_t>(v);
                    std::uint16_t bits;
                    std::memcpy(&bits, &value, 2);
                    if (swap) bits = io::bswap16(bits);
                    std::memcpy(buf.data() + 2 * i, &bits, 2);
                }
                break;
            }
            case MrcHeader::kModeFloat32: {
                for (std::size_t i = 0; i < img.pixels.size(); ++i) {
                    const auto value = static_cast<float>(img.pixels[i]);
                    std::uint32_t bits;
                    std::memcpy(&bits, &value, 4);
                    if (swap) bits = io::bswap32(bits);
                    std::memcpy(buf.data() + 4 * i, &bits, 4);
                }
                break;
            }
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw IoError("short write: " + path.string());
}

}  // namespace cryoreduce
