#include "cryoreduce/datastore.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"

namespace cryoreduce {

namespace {

constexpr const char* kManifestName = "manifest.json";

std::string chunk_file_name(std::size_t chunk_id) {
    char name[32];
    std::snprintf(name, sizeof(name), "chunk_%05zu.f64", chunk_id);
    return name;
}

}  // namespace

DataStore DataStore::build(const std::vector<ImageRecord>& records, std::size_t chunk_images,
                           const std::filesystem::path& dir) {
    if (records.empty()) throw ValidationError("cannot build a datastore from zero images");
    if (chunk_images < 1) throw ValidationError("chunk_images must be >= 1");

    const std::size_t width = records.front().width;
    const std::size_t height = records.front().height;
    std::unordered_set<std::string> seen;
    for (const auto& rec : records) {
        validate_image(rec);
        if (rec.width != width || rec.height != height)
            throw ValidationError("mixed image dimensions at '" + rec.id + "' (" +
                                  std::to_string(rec.width) + "x" + std::to_string(rec.height) +
                                  " vs " + std::to_string(width) + "x" + std::to_string(height) + ")");
        if (!seen.insert(rec.id).second)
            throw ValidationError("duplicate image id '" + rec.id + "'");
    }

    std::filesystem::create_directories(dir);

    DataStore store;
    store.root_ = dir;
    store.vector_length_ = width * height;
    store.manifest_.reserve(records.size());
    for (const auto& rec : records) {
        store.manifest_.push_back(
            {rec.id, rec.width, rec.height, rec.source, rec.frame, rec.source_bytes});
    }

    const std::size_t chunk_count = (records.size() + chunk_images - 1) / chunk_images;
    store.chunks_.reserve(chunk_count);
    for (std::size_t k = 0; k < chunk_count; ++k) {
        const std::size_t first = k * chunk_images;
        const std::size_t count = std::min(chunk_images, records.size() - first);

        std::vector<double> block;
        block.reserve(count * store.vector_length_);
        for (std::size_t i = 0; i < count; ++i) {
            const auto vec = image_to_vector(records[first + i]);
            block.insert(block.end(), vec.begin(), vec.end());
        }
        const std::string file = chunk_file_name(k);
        io::write_f64_le(dir / file, block);

        store.chunks_.push_back({k, first, count, file, 0,
                                 static_cast<std::uint64_t>(block.size() * sizeof(double))});
    }

    nlohmann::ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["vector_length"] = store.vector_length_;
    manifest["image_count"] = store.manifest_.size();
    auto& images = manifest["images"] = nlohmann::ordered_json::array();
    for (const auto& meta : store.manifest_) {
        images.push_back({{"id", meta.id},
                          {"width", meta.width},
                          {"height", meta.height},
                          {"source", meta.source},
                          {"frame", meta.frame},
                          {"source_bytes", meta.source_bytes}});
    }
    auto& chunks = manifest["chunks"] = nlohmann::ordered_json::array();
    for (const auto& c : store.chunks_) {
        chunks.push_back({{"chunk_id", c.chunk_id},
                          {"first_image", c.first_image},
                          {"image_count", c.image_count},
                          {"file", c.file},
                          {"byte_offset", c.byte_offset},
                          {"byte_length", c.byte_length}});
    }
    io::write_file_bytes(dir / kManifestName, manifest.dump(2) + "\n");
    return store;
}

DataStore DataStore::open(const std::filesystem::path& dir) {
    const auto manifest_path = dir / kManifestName;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(io::read_file_bytes(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad datastore manifest " + manifest_path.string() + ": " + e.what());
    }

    DataStore store;
    store.root_ = dir;
    try {
        store.vector_length_ = manifest.at("vector_length").get<std::size_t>();
        for (const auto& j : manifest.at("images")) {
            store.manifest_.push_back({j.at("id").get<std::string>(),
                                       j.at("width").get<std::size_t>(),
                                       j.at("height").get<std::size_t>(),
                                       j.at("source").get<std::string>(),
                                       j.at("frame").get<std::int64_t>(),
                                       j.at("source_bytes").get<std::int64_t>()});
        }
        for (const auto& j : manifest.at("chunks")) {
            store.chunks_.push_back({j.at("chunk_id").get<std::size_t>(),
                                     j.at("first_image").get<std::size_t>(),
                                     j.at("image_count").get<std::size_t>(),
                                     j.at("file").get<std::string>(),
                                     j.at("byte_offset").get<std::uint64_t>(),
                                     j.at("byte_length").get<std::uint64_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad datastore manifest " + manifest_path.string() + ": " + e.what());
    }
    if (store.manifest_.empty()) throw FormatError("datastore manifest lists no images");

    // chunks must partition the manifest in order
    std::size_t cursor = 0;
    for (const auto& c : store.chunks_) {
        if (c.first_image != cursor || c.image_count == 0)
            throw FormatError("datastore chunks do not partition the manifest: " +
                              manifest_path.string());
        if (c.byte_length != c.image_count * store.vector_length_ * sizeof(double))
            throw FormatError("chunk byte length mismatch in " + manifest_path.string());
        cursor += c.image_count;
    }
    if (cursor != store.manifest_.size())
        throw FormatError("datastore chunks do not cover the manifest: " +
                          manifest_path.string());
    return store;
}

std::int64_t DataStore::total_source_bytes() const {
    std::int64_t total = 0;
    for (const auto& meta : manifest_) total += meta.source_bytes;
    return total;
}

Chunk DataStore::read_chunk(std::size_t chunk_index) const {
    const ChunkInfo& info = chunks_.at(chunk_index);
    Chunk chunk;
    chunk.chunk_id = info.chunk_id;
    chunk.first_image = info.first_image;
    chunk.image_count = info.image_count;
    chunk.vector_length = vector_length_;
    chunk.values = io::read_f64_le(root_ / info.file, info.byte_offset,
                                   info.image_count * vector_length_);
    return chunk;
}

std::vector<double> DataStore::read_image(std::size_t image_index) const {
    if (image_index >= manifest_.size())
        throw ValidationError("image index out of range: " + std::to_string(image_index));
    for (const auto& info : chunks_) {
        if (image_index >= info.first_image && image_index < info.first_image + info.image_count) {
            const std::size_t local = image_index - info.first_image;
            return io::read_f64_le(root_ / info.file,
                                   info.byte_offset + local * vector_length_ * sizeof(double),
                                   vector_length_);
        }
    }
    throw FormatError("chunks do not cover image index " + std::to_string(image_index));
}

std::vector<ImageRecord> load_raw_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open: " + manifest_path.string());
    const auto base_dir = manifest_path.parent_path();

    std::vector<ImageRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string id, width_s, height_s, path_s;
        if (!std::getline(ss, id, ',') || !std::getline(ss, width_s, ',') ||
            !std::getline(ss, height_s, ',') || !std::getline(ss, path_s))
            throw FormatError("bad manifest line " + std::to_string(line_no) + " in " +
                              manifest_path.string() + " (want id,width,height,path)");

        ImageRecord rec;
        rec.id = id;
        try {
            rec.width = std::stoul(width_s);
            rec.height = std::stoul(height_s);
        } catch (const std::exception&) {
            throw FormatError("bad dimensions on manifest line " + std::to_string(line_no) +
                              " in " + manifest_path.string());
        }
        std::filesystem::path file(path_s);
        if (file.is_relative()) file = base_dir / file;
        rec.source = file.string();
        rec.source_bytes = static_cast<std::int64_t>(rec.width * rec.height * sizeof(double));

        const auto actual = std::filesystem::file_size(file);
        const auto expected = rec.width * rec.height * sizeof(double);
        if (actual != expected)
            throw FormatError("raw file " + file.string() + " has " + std::to_string(actual) +
                              " bytes, expected " + std::to_string(expected));
        rec.pixels = io::read_f64_le(file, 0, rec.width * rec.height);
        for (double v : rec.pixels) {
            if (!std::isfinite(v))
                throw FormatError("non-finite pixel in raw image '" + rec.id + "'");
        }
        records.push_back(std::move(rec));
    }
    if (records.empty())
        throw FormatError("raw manifest lists no images: " + manifest_path.string());
    return records;
}

}  // namespace cryoreduce
