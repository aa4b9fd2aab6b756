#ifndef CRYOREDUCE_COVARIANCE_HPP
#define CRYOREDUCE_COVARIANCE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cryoreduce/datastore.hpp"
#include "cryoreduce/matrix.hpp"

namespace cryoreduce {

enum class CovMode { pixel, gram };

std::string to_string(CovMode mode);
CovMode cov_mode_from_string(const std::string& name);

// Per-pixel mean over all images, computed in one map-reduce pass
// (map: per-chunk vector sum, reduce: vector addition).
std::vector<double> compute_mean(const DataStore& store, unsigned workers = 0);

// The (optionally mean-centered) column matrix over a datastore. Columns are
// materialized lazily chunk by chunk; the full matrix is never resident.
struct DataMatrix {
    const DataStore* store = nullptr;
    std::vector<double> mean;  // length vector_length when centered
    bool centered = false;

    std::size_t image_count() const { return store->image_count(); }
    std::size_t vector_length() const { return store->vector_length(); }

    // Chunk with the mean subtracted from every column when centered.
    Chunk column_chunk(std::size_t chunk_index) const;
};

// Binds a mean vector to the store; every column becomes x - mean.
DataMatrix center(const DataStore& store, std::vector<double> mean);

// View of the raw columns, no centering.
DataMatrix uncentered(const DataStore& store);

struct CovarianceResult {
    CovMode mode = CovMode::gram;
    Matrix C;                 // pixel: N2 x N2, gram: M x M; exactly symmetric
    std::vector<double> s;    // sqrt of diag(C)
    std::size_t image_count = 0;
    std::size_t vector_length = 0;
};

struct CovarianceOptions {
    CovMode mode = CovMode::gram;
    unsigned workers = 0;                                  // 0 = logical CPUs
    std::uint64_t memory_budget_bytes = 2ull << 30;        // 2 GiB
};

// C = sum_j phi_j phi_j^T (pixel mode) or C[i][j] = phi_i . phi_j (gram
// mode), with no 1/(M-1) factor; the later correlation normalization cancels
// any scalar. Pixel mode maps per-chunk outer-product sums and reduces by
// matrix addition. Gram mode maps one block per ordered chunk pair (a <= b)
// and reduces by disjoint block assembly, mirroring off-diagonal blocks.
// A result that would exceed the memory budget is an error naming the
// feasible mode.
CovarianceResult covariance(const DataMatrix& columns, const CovarianceOptions& options);

// Headerless little-endian float64 matrix plus a JSON sidecar
// (<prefix>.f64 / <prefix>.json).
void save_covariance(const CovarianceResult& cov, const std::filesystem::path& prefix);
CovarianceResult load_covariance(const std::filesystem::path& prefix);

}  // namespace cryoreduce

#endif
