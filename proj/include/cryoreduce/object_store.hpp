#ifndef CRYOREDUCE_OBJECT_STORE_HPP
#define CRYOREDUCE_OBJECT_STORE_HPP

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace cryoreduce {

// Minimal object-store surface the pipeline uploads through. Keys are
// '/'-separated paths; get(put(k, b)) returns b byte-exact and list(prefix)
// returns every key starting with the prefix, sorted. Implementations must
// be safe for concurrent puts on distinct keys.
class ObjectStoreClient {
public:
    virtual ~ObjectStoreClient() = default;

    virtual void put(const std::string& key, const std::string& bytes) = 0;
    virtual std::string get(const std::string& key) const = 0;
    virtual std::vector<std::string> list(const std::string& prefix) const = 0;
    virtual std::string descriptor() const = 0;
};

// Keys map to files under a root directory. The only backend shipped here;
// a remote backend can slot in behind the same interface without touching
// pipeline code.
class LocalDirectoryStore : public ObjectStoreClient {
public:
    explicit LocalDirectoryStore(std::filesystem::path root);

    void put(const std::string& key, const std::string& bytes) override;
    std::string get(const std::string& key) const override;
    std::vector<std::string> list(const std::string& prefix) const override;
    std::string descriptor() const override;

private:
    std::filesystem::path resolve(const std::string& key) const;
    std::filesystem::path root_;
};

// Backend descriptors: "local:<dir>" or a bare directory path.
std::unique_ptr<ObjectStoreClient> open_store(const std::string& descriptor);

}  // namespace cryoreduce

#endif
