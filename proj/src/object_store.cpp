#include "cryoreduce/object_store.hpp"

#include <algorithm>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"

namespace cryoreduce {

namespace {

// Keys must stay inside the store root: nonempty '/'-separated segments,
// no '.' / '..', no leading slash, no backslashes.
void validate_key(const std::string& key) {
    if (key.empty() || key.front() == '/' || key.back() == '/')
        throw ValidationError("bad object key '" + key + "'");
    std::string segment;
    for (char ch : key) {
        if (ch == '\\') throw ValidationError("bad object key '" + key + "'");
        if (ch == '/') {
            if (segment.empty() || segment == "." || segment == "..")
                throw ValidationError("bad object key '" + key + "'");
            segment.clear();
        } else {
            segment += ch;
        }
    }
    if (segment.empty() || segment == "." || segment == "..")
        throw ValidationError("bad object key '" + key + "'");
}

}  // namespace

LocalDirectoryStore::LocalDirectoryStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path LocalDirectoryStore::resolve(const std::string& key) const {
    validate_key(key);
    return root_ / std::filesystem::path(key);
}

void LocalDirectoryStore::put(const std::string& key, const std::string& bytes) {
    const auto path = resolve(key);
    std::filesystem::create_directories(path.parent_path());
    io::write_file_bytes(path, bytes);
}

std::string LocalDirectoryStore::get(const std::string& key) const {
    const auto path = resolve(key);
    if (!std::filesystem::is_regular_file(path))
        throw IoError("no such object: " + key);
    return io::read_file_bytes(path);
}

std::vector<std::string> LocalDirectoryStore::list(const std::string& prefix) const {
    std::vector<std::string> keys;
    if (!std::filesystem::exists(root_)) return keys;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root_)) {
        if (!entry.is_regular_file()) continue;
        const std::string key = entry.path().lexically_relative(root_).generic_string();
        if (key.compare(0, prefix.size(), prefix) == 0) keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::string LocalDirectoryStore::descriptor() const { return "local:" + root_.string(); }

std::unique_ptr<ObjectStoreClient> open_store(const std::string& descriptor) {
    std::string path = descriptor;
    if (path.rfind("local:", 0) == 0) path = path.substr(6);
    if (path.empty()) throw ValidationError("empty object store descriptor");
    if (path.find(':') != std::string::npos)
        throw ValidationError("unsupported object store backend '" + descriptor +
                              "' (only local:<dir> is built in)");
    return std::make_unique<LocalDirectoryStore>(path);
}

}  // namespace cryoreduce
