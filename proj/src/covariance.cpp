#include "cryoreduce/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"
#include "cryoreduce/mapreduce.hpp"

namespace cryoreduce {

std::string to_string(CovMode mode) {
    return mode == CovMode::pixel ? "pixel" : "gram";
}

CovMode cov_mode_from_string(const std::string& name) {
    if (name == "pixel") return CovMode::pixel;
    if (name == "gram") return CovMode::gram;
    throw ValidationError("unknown covariance mode '" + name + "' (want pixel or gram)");
}

std::vector<double> compute_mean(const DataStore& store, unsigned workers) {
    if (store.image_count() == 0) throw ValidationError("empty datastore");
    const std::size_t n = store.vector_length();

    MapReduceJob<std::vector<double>> job;
    job.chunk_source = &store;
    job.identity = std::vector<double>(n, 0.0);
    job.workers = workers;
    job.map_fn = [n](const Chunk& chunk) {
        std::vector<double> sum(n, 0.0);
        for (std::size_t i = 0; i < chunk.image_count; ++i) {
            const auto vec = chunk.image(i);
            for (std::size_t j = 0; j < n; ++j) sum[j] += vec[j];
        }
        return sum;
    };
    job.reduce_fn = [](std::vector<double> a, std::vector<double> b) {
        for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
        return a;
    };

    std::vector<double> mean = run(job);
    const double inv_m = 1.0 / static_cast<double>(store.image_count());
    for (double& v : mean) v *= inv_m;
    return mean;
}

Chunk DataMatrix::column_chunk(std::size_t chunk_index) const {
    Chunk chunk = store->read_chunk(chunk_index);
    if (centered) {
        for (std::size_t i = 0; i < chunk.image_count; ++i) {
            auto vec = chunk.image(i);
            for (std::size_t j = 0; j < vec.size(); ++j) vec[j] -= mean[j];
        }
    }
    return chunk;
}

DataMatrix center(const DataStore& store, std::vector<double> mean) {
    if (mean.size() != store.vector_length())
        throw ValidationError("mean vector length " + std::to_string(mean.size()) +
                              " != vector length " + std::to_string(store.vector_length()));
    return DataMatrix{&store, std::move(mean), true};
}

DataMatrix uncentered(const DataStore& store) { return DataMatrix{&store, {}, false}; }

namespace {

// One rectangular tile of the Gram matrix, rows [row0, row0+rows) x columns
// [col0, col0+cols). Blocks from distinct chunk pairs are disjoint, so the
// reduce is a plain merge.
struct GramBlock {
    std::size_t row0 = 0, col0 = 0, rows = 0, cols = 0;
    std::vector<double> values;  // rows * cols
};

CovarianceResult covariance_pixel(const DataMatrix& columns, const CovarianceOptions& options) {
    const std::size_t n = columns.vector_length();

    MapReduceJob<Matrix> job;
    job.chunk_source = columns.store;
    job.identity = Matrix(n, n, 0.0);
    job.workers = options.workers;
    const DataMatrix* cols = &columns;
    job.map_fn = [cols, n](const Chunk& raw) {
        Matrix partial(n, n, 0.0);
        std::vector<double> phi(n);
        for (std::size_t i = 0; i < raw.image_count; ++i) {
            const auto src = raw.image(i);
            if (cols->centered) {
                for (std::size_t j = 0; j < n; ++j) phi[j] = src[j] - cols->mean[j];
            } else {
                std::copy(src.begin(), src.end(), phi.begin());
            }
            for (std::size_t r = 0; r < n; ++r) {
                const double pr = phi[r];
                if (pr == 0.0) continue;
                auto row = partial.row(r);
                for (std::size_t c = 0; c < n; ++c) row[c] += pr * phi[c];
            }
        }
        return partial;
    };
    job.reduce_fn = [](Matrix a, Matrix b) {
        a += b;
        return a;
    };

    CovarianceResult result;
    result.mode = CovMode::pixel;
    result.C = run(job);
    result.image_count = columns.image_count();
    result.vector_length = n;
    return result;
}

CovarianceResult covariance_gram(const DataMatrix& columns, const CovarianceOptions& options) {
    const DataStore& store = *columns.store;
    const std::size_t m = store.image_count();
    const std::size_t chunk_count = store.chunk_count();

    // Ordered chunk pairs (a <= b): one block per pair, diagonal blocks once,
    // off-diagonal blocks mirrored at assembly.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(chunk_count * (chunk_count + 1) / 2);
    for (std::size_t a = 0; a < chunk_count; ++a)
        for (std::size_t b = a; b < chunk_count; ++b) pairs.emplace_back(a, b);

    using Partial = std::vector<GramBlock>;
    auto map_fn = [&columns, &pairs](std::size_t task) {
        const auto [a, b] = pairs[task];
        const Chunk ca = columns.column_chunk(a);
        const Chunk cb_storage = (a == b) ? Chunk{} : columns.column_chunk(b);
        const Chunk& cb = (a == b) ? ca : cb_storage;

        GramBlock block;
        block.row0 = ca.first_image;
        block.col0 = cb.first_image;
        block.rows = ca.image_count;
        block.cols = cb.image_count;
        block.values.resize(block.rows * block.cols);
        for (std::size_t i = 0; i < block.rows; ++i) {
            const auto phi_i = ca.image(i);
            for (std::size_t j = 0; j < block.cols; ++j) {
                block.values[i * block.cols + j] = dot(phi_i, cb.image(j));
            }
        }
        return Partial{std::move(block)};
    };
    auto reduce_fn = [](Partial a, Partial b) {
        a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
        return a;
    };

    const Partial blocks = detail::run_indexed<Partial>(pairs.size(), map_fn, reduce_fn,
                                                        Partial{}, options.workers);

    CovarianceResult result;
    result.mode = CovMode::gram;
    result.C = Matrix(m, m, 0.0);
    for (const auto& block : blocks) {
        for (std::size_t i = 0; i < block.rows; ++i) {
            for (std::size_t j = 0; j < block.cols; ++j) {
                const double v = block.values[i * block.cols + j];
                result.C(block.row0 + i, block.col0 + j) = v;
                result.C(block.col0 + j, block.row0 + i) = v;
            }
        }
    }
    result.image_count = m;
    result.vector_length = columns.vector_length();
    return result;
}

}  // namespace

CovarianceResult covariance(const DataMatrix& columns, const CovarianceOptions& options) {
    if (columns.store == nullptr || columns.image_count() == 0)
        throw ValidationError("covariance of an empty data matrix");

    const std::size_t m = columns.image_count();
    const std::size_t n = columns.vector_length();
    const std::uint64_t pixel_bytes = static_cast<std::uint64_t>(n) * n * sizeof(double);
    const std::uint64_t gram_bytes = static_cast<std::uint64_t>(m) * m * sizeof(double);

    if (options.mode == CovMode::pixel && pixel_bytes > options.memory_budget_bytes) {
        if (gram_bytes <= options.memory_budget_bytes)
            throw BudgetError("pixel-mode covariance needs " + std::to_string(pixel_bytes) +
                              " bytes, over the " + std::to_string(options.memory_budget_bytes) +
                              "-byte budget; gram mode is feasible for this stack");
        throw BudgetError("pixel-mode covariance needs " + std::to_string(pixel_bytes) +
                          " bytes, over budget; no mode is feasible");
    }
    if (options.mode == CovMode::gram && gram_bytes > options.memory_budget_bytes) {
        if (pixel_bytes <= options.memory_budget_bytes)
            throw BudgetError("gram-mode covariance needs " + std::to_string(gram_bytes) +
                              " bytes, over the " + std::to_string(options.memory_budget_bytes) +
                              "-byte budget; pixel mode is feasible for this stack");
        throw BudgetError("gram-mode covariance needs " + std::to_string(gram_bytes) +
                          " bytes, over budget; no mode is feasible");
    }

    CovarianceResult result = options.mode == CovMode::pixel ? covariance_pixel(columns, options)
                                                             : covariance_gram(columns, options);
    result.s.resize(result.C.rows());
    for (std::size_t i = 0; i < result.C.rows(); ++i)
        result.s[i] = std::sqrt(result.C(i, i));
    return result;
}

void save_covariance(const CovarianceResult& cov, const std::filesystem::path& prefix) {
    io::write_f64_le(prefix.string() + ".f64", cov.C.storage());

    nlohmann::ordered_json sidecar;
    sidecar["mode"] = to_string(cov.mode);
    sidecar["image_count"] = cov.image_count;
    sidecar["vector_length"] = cov.vector_length;
    sidecar["dim"] = cov.C.rows();
    io::write_file_bytes(prefix.string() + ".json", sidecar.dump(2) + "\n");
}

CovarianceResult load_covariance(const std::filesystem::path& prefix) {
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(io::read_file_bytes(prefix.string() + ".json"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad covariance sidecar: " + std::string(e.what()));
    }
    CovarianceResult cov;
    cov.mode = cov_mode_from_string(sidecar.at("mode").get<std::string>());
    cov.image_count = sidecar.at("image_count").get<std::size_t>();
    cov.vector_length = sidecar.at("vector_length").get<std::size_t>();
    const auto dim = sidecar.at("dim").get<std::size_t>();
    cov.C = Matrix(dim, dim);
    cov.C.storage() = io::read_f64_le(prefix.string() + ".f64", 0, dim * dim);
    cov.s.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) cov.s[i] = std::sqrt(cov.C(i, i));
    return cov;
}

}  // namespace cryoreduce
