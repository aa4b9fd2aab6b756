#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cryoreduce/covariance.hpp"
#include "cryoreduce/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cryoreduce;

namespace {

std::vector<ImageRecord> records_from_columns(const std::vector<std::vector<double>>& columns,
                                              std::size_t width, std::size_t height) {
    std::vector<ImageRecord> records;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        ImageRecord rec;
        rec.id = "col-" + std::to_string(i);
        rec.width = width;
        rec.height = height;
        rec.pixels = columns[i];
        rec.source_bytes = static_cast<std::int64_t>(columns[i].size() * sizeof(double));
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

TEST_CASE("mean: arithmetic examples") {
    const auto dir = testutil::scratch("cov_mean");
    const DataStore store =
        DataStore::build(records_from_columns({{1, 2}, {3, 4}}, 2, 1), 1, dir);
    const auto mean = compute_mean(store);
    REQUIRE(mean.size() == 2);
    CHECK(mean[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mean[1] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("mean of a single image is the image") {
    const auto dir = testutil::scratch("cov_mean1");
    const DataStore store =
        DataStore::build(records_from_columns({{5, -2, 0.5, 9}}, 2, 2), 4, dir);
    const auto mean = compute_mean(store);
    CHECK(mean == std::vector<double>{5, -2, 0.5, 9});
}

TEST_CASE("mean over 50 random 4x4 images matches the sequential fold at any worker count") {
    std::mt19937 rng(21);
    const auto records = oracles::random_stack(rng, 50, 4, 4);
    const DataStore store = DataStore::build(records, 6, testutil::scratch("cov_mean50"));
    const auto expected = oracles::direct_mean(oracles::record_columns(records));

    for (unsigned workers : {1u, 4u}) {
        const auto mean = compute_mean(store, workers);
        for (std::size_t j = 0; j < mean.size(); ++j)
            CHECK(mean[j] == doctest::Approx(expected[j]).epsilon(1e-12));
    }
}

TEST_CASE("center: subtraction examples") {
    const auto dir = testutil::scratch("cov_center");
    const DataStore store =
        DataStore::build(records_from_columns({{1, 2}, {3, 4}}, 2, 1), 2, dir);
    const DataMatrix columns = center(store, {2, 3});
    const Chunk chunk = columns.column_chunk(0);
    CHECK(chunk.image(0)[0] == -1.0);
    CHECK(chunk.image(0)[1] == -1.0);
    CHECK(chunk.image(1)[0] == 1.0);
    CHECK(chunk.image(1)[1] == 1.0);

    CHECK_THROWS_AS(center(store, {1, 2, 3}), ValidationError);
}

TEST_CASE("centering identical images gives all-zero columns") {
    const auto dir = testutil::scratch("cov_zero");
    const std::vector<double> img{2, 4, 8, 16};
    const DataStore store =
        DataStore::build(records_from_columns({img, img, img}, 2, 2), 2, dir);
    const DataMatrix columns = center(store, compute_mean(store));
    for (std::size_t k = 0; k < store.chunk_count(); ++k) {
        const Chunk chunk = columns.column_chunk(k);
        for (double v : chunk.values) CHECK(v == 0.0);
    }
}

TEST_CASE("column sums of a centered random stack vanish") {
    std::mt19937 rng(22);
    const auto records = oracles::random_stack(rng, 30, 5, 5);
    const DataStore store = DataStore::build(records, 7, testutil::scratch("cov_colsum"));
    const DataMatrix columns = center(store, compute_mean(store));

    std::vector<double> colsum(store.vector_length(), 0.0);
    for (std::size_t k = 0; k < store.chunk_count(); ++k) {
        const Chunk chunk = columns.column_chunk(k);
        for (std::size_t i = 0; i < chunk.image_count; ++i) {
            const auto vec = chunk.image(i);
            for (std::size_t j = 0; j < vec.size(); ++j) colsum[j] += vec[j];
        }
    }
    for (double v : colsum) CHECK(std::abs(v) <= 1e-8);
}

TEST_CASE("hand example: columns (-1,-1) and (1,1)") {
    const auto dir = testutil::scratch("cov_hand");
    const DataStore store =
        DataStore::build(records_from_columns({{-1, -1}, {1, 1}}, 2, 1), 1, dir);
    const DataMatrix columns = uncentered(store);

    CovarianceOptions options;
    options.mode = CovMode::pixel;
    const CovarianceResult pixel = covariance(columns, options);
    CHECK(pixel.C(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pixel.C(0, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pixel.C(1, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pixel.C(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pixel.s[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    options.mode = CovMode::gram;
    const CovarianceResult gram = covariance(columns, options);
    CHECK(gram.C(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(gram.C(0, 1) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(gram.C(1, 0) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(gram.C(1, 1) == doctest::Approx(2.0).epsilon(1e-14));

    // both modes share the single nonzero eigenvalue 4
    const auto pixel_eigen = oracles::oracle_jacobi(pixel.C);
    const auto gram_eigen = oracles::oracle_jacobi(gram.C);
    CHECK(pixel_eigen.values[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(gram_eigen.values[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(pixel_eigen.values[1]) <= 1e-12);
    CHECK(std::abs(gram_eigen.values[1]) <= 1e-12);
}

TEST_CASE("all-zero columns give a zero matrix and zero s in both modes") {
    const auto dir = testutil::scratch("cov_zeros");
    const DataStore store = DataStore::build(
        records_from_columns({{0, 0, 0, 0}, {0, 0, 0, 0}}, 2, 2), 1, dir);
    const DataMatrix columns = uncentered(store);
    for (CovMode mode : {CovMode::pixel, CovMode::gram}) {
        CovarianceOptions options;
        options.mode = mode;
        const CovarianceResult cov = covariance(columns, options);
        for (double v : cov.C.storage()) CHECK(v == 0.0);
        for (double v : cov.s) CHECK(v == 0.0);
    }
}

TEST_CASE("20 random 6x6 images: pixel and gram modes share their nonzero spectrum") {
    std::mt19937 rng(23);
    const auto records = oracles::random_stack(rng, 20, 6, 6);
    const DataStore store = DataStore::build(records, 6, testutil::scratch("cov_dual"));
    const DataMatrix columns = center(store, compute_mean(store));

    CovarianceOptions options;
    options.mode = CovMode::pixel;
    const auto pixel = covariance(columns, options);
    options.mode = CovMode::gram;
    const auto gram = covariance(columns, options);

    auto pixel_eigen = oracles::oracle_jacobi(pixel.C).values;
    auto gram_eigen = oracles::oracle_jacobi(gram.C).values;
    // the gram matrix is 20x20, the pixel matrix 36x36; compare the top 19
    // (centering sinks one dimension)
    const double scale = std::abs(gram_eigen[0]);
    for (std::size_t i = 0; i < 19; ++i)
        CHECK(std::abs(pixel_eigen[i] - gram_eigen[i]) <= 1e-9 * scale);

    // trace identity: trace(C) = sum_j |phi_j|^2 in both modes
    double frob = 0.0;
    const auto centered = oracles::centered_columns(oracles::record_columns(records));
    for (const auto& col : centered)
        for (double v : col) frob += v * v;
    double trace_pixel = 0.0, trace_gram = 0.0;
    for (std::size_t i = 0; i < pixel.C.rows(); ++i) trace_pixel += pixel.C(i, i);
    for (std::size_t i = 0; i < gram.C.rows(); ++i) trace_gram += gram.C(i, i);
    CHECK(trace_pixel == doctest::Approx(frob).epsilon(1e-10));
    CHECK(trace_gram == doctest::Approx(frob).epsilon(1e-10));
}

TEST_CASE("chunking invariance: chunk sizes 1, 3 and M agree") {
    std::mt19937 rng(24);
    const auto records = oracles::random_stack(rng, 14, 4, 4);

    std::vector<Matrix> gram_results, pixel_results;
    for (std::size_t chunk : {std::size_t(1), std::size_t(3), std::size_t(14)}) {
        const DataStore store = DataStore::build(
            records, chunk, testutil::scratch("cov_chunk_" + std::to_string(chunk)));
        const DataMatrix columns = center(store, compute_mean(store));
        CovarianceOptions options;
        options.mode = CovMode::gram;
        gram_results.push_back(covariance(columns, options).C);
        options.mode = CovMode::pixel;
        pixel_results.push_back(covariance(columns, options).C);
    }
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(oracles::rel_frobenius_gap(gram_results[0], gram_results[i]) <= 1e-10);
        CHECK(oracles::rel_frobenius_gap(pixel_results[0], pixel_results[i]) <= 1e-10);
    }
}

TEST_CASE("covariance matches the direct single-loop oracle") {
    std::mt19937 rng(25);
    const auto records = oracles::random_stack(rng, 11, 3, 4);
    const DataStore store = DataStore::build(records, 4, testutil::scratch("cov_oracle"));
    const DataMatrix columns = center(store, compute_mean(store));
    const auto centered = oracles::centered_columns(oracles::record_columns(records));

    CovarianceOptions options;
    options.mode = CovMode::pixel;
    CHECK(oracles::rel_frobenius_gap(oracles::direct_covariance_pixel(centered),
                                     covariance(columns, options).C) <= 1e-10);
    options.mode = CovMode::gram;
    CHECK(oracles::rel_frobenius_gap(oracles::direct_covariance_gram(centered),
                                     covariance(columns, options).C) <= 1e-10);
}

TEST_CASE("result is exactly symmetric and positive semi-definite") {
    std::mt19937 rng(26);
    const auto records = oracles::random_stack(rng, 16, 4, 4);
    const DataStore store = DataStore::build(records, 5, testutil::scratch("cov_psd"));
    const DataMatrix columns = center(store, compute_mean(store));

    for (CovMode mode : {CovMode::pixel, CovMode::gram}) {
        CovarianceOptions options;
        options.mode = mode;
        const CovarianceResult cov = covariance(columns, options);
        for (std::size_t i = 0; i < cov.C.rows(); ++i)
            for (std::size_t j = 0; j < cov.C.cols(); ++j)
                CHECK(cov.C(i, j) == cov.C(j, i));

        const auto eigen = oracles::oracle_jacobi(cov.C);
        const double norm = cov.C.frobenius_norm();
        for (double v : eigen.values) CHECK(v >= -1e-8 * norm);
        for (std::size_t i = 0; i < cov.s.size(); ++i) {
            CHECK(cov.s[i] >= 0.0);
            CHECK(cov.s[i] == std::sqrt(cov.C(i, i)));
        }
    }
}

TEST_CASE("memory budget violations name the feasible mode") {
    std::mt19937 rng(27);
    // 4 images of 16x16 -> N2 = 256, pixel matrix = 512 KiB, gram = 128 B
    const auto records = oracles::random_stack(rng, 4, 16, 16);
    const DataStore store = DataStore::build(records, 2, testutil::scratch("cov_budget"));
    const DataMatrix columns = uncentered(store);

    CovarianceOptions options;
    options.mode = CovMode::pixel;
    options.memory_budget_bytes = 64 * 1024;
    CHECK_THROWS_WITH_AS(covariance(columns, options), doctest::Contains("gram mode"),
                         BudgetError);

    // many small images: the gram matrix is the big one
    const auto wide = oracles::random_stack(rng, 20, 2, 2);
    const DataStore wide_store = DataStore::build(wide, 5, testutil::scratch("cov_budget2"));
    const DataMatrix wide_columns = uncentered(wide_store);
    options.mode = CovMode::gram;
    options.memory_budget_bytes = 200;  // gram needs 3200, pixel 128
    CHECK_THROWS_WITH_AS(covariance(wide_columns, options), doctest::Contains("pixel mode"),
                         BudgetError);
}

TEST_CASE("covariance persistence round-trips") {
    std::mt19937 rng(28);
    const auto records = oracles::random_stack(rng, 6, 3, 3);
    const DataStore store = DataStore::build(records, 2, testutil::scratch("cov_persist"));
    const DataMatrix columns = center(store, compute_mean(store));
    CovarianceOptions options;
    options.mode = CovMode::gram;
    const CovarianceResult cov = covariance(columns, options);

    const auto dir = testutil::scratch("cov_persist_out");
    save_covariance(cov, dir / "cov");
    const CovarianceResult loaded = load_covariance(dir / "cov");
    CHECK(loaded.mode == cov.mode);
    CHECK(loaded.image_count == cov.image_count);
    CHECK(loaded.vector_length == cov.vector_length);
    CHECK(loaded.C.storage() == cov.C.storage());
}
