#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "binary_io.hpp"
#include "cryoreduce/datastore.hpp"
#include "cryoreduce/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cryoreduce;

TEST_CASE("ceiling partition: 5 images at chunk size 2 -> (2,2,1)") {
    const auto dir = testutil::scratch("ds_partition");
    std::mt19937 rng(1);
    const auto records = oracles::random_stack(rng, 5, 3, 3);
    const DataStore store = DataStore::build(records, 2, dir);

    REQUIRE(store.chunk_count() == 3);
    CHECK(store.chunks()[0].image_count == 2);
    CHECK(store.chunks()[1].image_count == 2);
    CHECK(store.chunks()[2].image_count == 1);
    CHECK(store.chunks()[1].first_image == 2);
    CHECK(store.vector_length() == 9);
}

TEST_CASE("chunk size larger than the stack clamps to one chunk") {
    const auto dir = testutil::scratch("ds_clamp");
    std::mt19937 rng(2);
    const auto records = oracles::random_stack(rng, 4, 2, 2);
    const DataStore store = DataStore::build(records, 100, dir);
    REQUIRE(store.chunk_count() == 1);
    CHECK(store.chunks()[0].image_count == 4);
}

TEST_CASE("100 images at chunk size 7: 15 chunks, concatenation round-trip") {
    const auto dir = testutil::scratch("ds_roundtrip");
    std::mt19937 rng(3);
    const auto records = oracles::random_stack(rng, 100, 8, 8);
    const DataStore store = DataStore::build(records, 7, dir);
    REQUIRE(store.chunk_count() == 15);

    std::vector<double> concatenated;
    for (std::size_t k = 0; k < store.chunk_count(); ++k) {
        const Chunk chunk = store.read_chunk(k);
        CHECK(chunk.first_image == 7 * k);
        concatenated.insert(concatenated.end(), chunk.values.begin(), chunk.values.end());
    }
    std::vector<double> expected;
    for (const auto& rec : records)
        expected.insert(expected.end(), rec.pixels.begin(), rec.pixels.end());
    REQUIRE(concatenated.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(concatenated[i] == expected[i]);
}

TEST_CASE("chunks partition the manifest id multiset") {
    const auto dir = testutil::scratch("ds_ids");
    std::mt19937 rng(4);
    const auto records = oracles::random_stack(rng, 23, 4, 4);
    const DataStore store = DataStore::build(records, 5, dir);

    std::multiset<std::string> from_chunks;
    for (const auto& info : store.chunks())
        for (std::size_t i = 0; i < info.image_count; ++i)
            from_chunks.insert(store.manifest()[info.first_image + i].id);
    std::multiset<std::string> from_manifest;
    for (const auto& meta : store.manifest()) from_manifest.insert(meta.id);
    CHECK(from_chunks == from_manifest);

    // disjoint + covering + order-preserving
    std::size_t cursor = 0;
    for (const auto& info : store.chunks()) {
        CHECK(info.first_image == cursor);
        cursor += info.image_count;
    }
    CHECK(cursor == store.image_count());
}

TEST_CASE("mixed dimensions are rejected naming the first mismatching id") {
    const auto dir = testutil::scratch("ds_mixed");
    std::mt19937 rng(5);
    auto records = oracles::random_stack(rng, 4, 4, 4);
    records[2].width = 5;
    records[2].pixels.resize(20, 0.0);
    CHECK_THROWS_WITH_AS(DataStore::build(records, 2, dir), doctest::Contains("rand-2"),
                         ValidationError);
}

TEST_CASE("duplicate ids are rejected") {
    const auto dir = testutil::scratch("ds_dup");
    std::mt19937 rng(6);
    auto records = oracles::random_stack(rng, 3, 4, 4);
    records[2].id = records[0].id;
    CHECK_THROWS_WITH_AS(DataStore::build(records, 2, dir), doctest::Contains("duplicate"),
                         ValidationError);
}

TEST_CASE("empty input and zero chunk size are rejected") {
    const auto dir = testutil::scratch("ds_empty");
    CHECK_THROWS_AS(DataStore::build({}, 2, dir), ValidationError);
    std::mt19937 rng(7);
    const auto records = oracles::random_stack(rng, 2, 2, 2);
    CHECK_THROWS_AS(DataStore::build(records, 0, dir), ValidationError);
}

TEST_CASE("open() reproduces the built datastore") {
    const auto dir = testutil::scratch("ds_open");
    std::mt19937 rng(8);
    const auto records = oracles::random_stack(rng, 9, 3, 2);
    const DataStore built = DataStore::build(records, 4, dir);
    const DataStore reopened = DataStore::open(dir);

    CHECK(reopened.image_count() == built.image_count());
    CHECK(reopened.vector_length() == built.vector_length());
    CHECK(reopened.chunk_count() == built.chunk_count());
    CHECK(reopened.total_source_bytes() == built.total_source_bytes());
    for (std::size_t k = 0; k < built.chunk_count(); ++k) {
        const auto a = built.read_chunk(k);
        const auto b = reopened.read_chunk(k);
        CHECK(a.values == b.values);
    }
    for (std::size_t i = 0; i < built.image_count(); ++i)
        CHECK(reopened.read_image(i) == records[i].pixels);
}

TEST_CASE("raw manifest ingest") {
    const auto dir = testutil::scratch("ds_raw");
    std::mt19937 rng(9);
    const auto records = oracles::random_stack(rng, 3, 4, 2);

    std::string manifest;
    for (const auto& rec : records) {
        const std::string file = rec.id + ".f64";
        cryoreduce::io::write_f64_le(dir / file, rec.pixels);
        manifest += rec.id + ",4,2," + file + "\n";
    }
    cryoreduce::io::write_file_bytes(dir / "manifest.csv", manifest);

    const auto loaded = load_raw_manifest(dir / "manifest.csv");
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded[i].id == records[i].id);
        CHECK(loaded[i].pixels == records[i].pixels);
        CHECK(loaded[i].source_bytes == 64);
    }

    // size mismatch is rejected
    cryoreduce::io::write_file_bytes(dir / "bad.f64", "123");
    cryoreduce::io::write_file_bytes(dir / "manifest_bad.csv", "x,4,2,bad.f64\n");
    CHECK_THROWS_AS(load_raw_manifest(dir / "manifest_bad.csv"), FormatError);
}
