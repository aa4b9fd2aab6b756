#ifndef CRYOREDUCE_DATASTORE_HPP
#define CRYOREDUCE_DATASTORE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cryoreduce/image.hpp"

namespace cryoreduce {

struct ImageMeta {
    std::string id;
    std::size_t width = 0;
    std::size_t height = 0;
    std::string source;
    std::int64_t frame = 0;
    std::int64_t source_bytes = 0;
};

struct ChunkInfo {
    std::size_t chunk_id = 0;
    std::size_t first_image = 0;    // index into the manifest
    std::size_t image_count = 0;
    std::string file;               // relative to the datastore root
    std::uint64_t byte_offset = 0;
    std::uint64_t byte_length = 0;
};

// One chunk's image vectors, materialized in memory. Vectors are stored
// back to back in manifest order.
struct Chunk {
    std::size_t chunk_id = 0;
    std::size_t first_image = 0;
    std::size_t image_count = 0;
    std::size_t vector_length = 0;
    std::vector<double> values;  // image_count * vector_length

    std::span<const double> image(std::size_t local_index) const {
        return {values.data() + local_index * vector_length, vector_length};
    }
    std::span<double> image(std::size_t local_index) {
        return {values.data() + local_index * vector_length, vector_length};
    }
};

// Chunked on-disk layout of an image collection: a JSON manifest plus one
// headerless little-endian float64 file per chunk. Whole images only; every
// image must flatten to the same vector length. Immutable once built, so a
// DataStore can be shared freely across worker threads.
class DataStore {
public:
    // Flattens each record and writes the chunk files and manifest under
    // `dir` (created if missing). Records keep their input order; chunks are
    // a ceiling partition by `chunk_images`. Rejects empty input, mixed
    // dimensions (naming the first mismatching id) and duplicate ids.
    static DataStore build(const std::vector<ImageRecord>& records,
                           std::size_t chunk_images,
                           const std::filesystem::path& dir);

    static DataStore open(const std::filesystem::path& dir);

    const std::filesystem::path& root() const { return root_; }
    std::size_t image_count() const { return manifest_.size(); }
    std::size_t vector_length() const { return vector_length_; }
    std::size_t chunk_count() const { return chunks_.size(); }
    const std::vector<ImageMeta>& manifest() const { return manifest_; }
    const std::vector<ChunkInfo>& chunks() const { return chunks_; }
    std::int64_t total_source_bytes() const;

    Chunk read_chunk(std::size_t chunk_index) const;

    // Convenience: read one image vector (used by uploads and spot checks).
    std::vector<double> read_image(std::size_t image_index) const;

private:
    std::filesystem::path root_;
    std::vector<ImageMeta> manifest_;
    std::vector<ChunkInfo> chunks_;
    std::size_t vector_length_ = 0;
};

// Ingests a directory of headerless little-endian float64 rasters described
// by a sidecar manifest with one `id,width,height,path` line per file.
// Relative paths resolve against the manifest's directory.
std::vector<ImageRecord> load_raw_manifest(const std::filesystem::path& manifest_path);

}  // namespace cryoreduce

#endif
