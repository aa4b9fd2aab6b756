#ifndef CRYOREDUCE_PCA_HPP
#define CRYOREDUCE_PCA_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "cryoreduce/covariance.hpp"
#include "cryoreduce/matrix.hpp"

namespace cryoreduce {

struct CorrelationMatrix {
    Matrix R;  // unit diagonal, symmetric, entries in [-1, 1] up to roundoff
    CovMode source_mode = CovMode::gram;

    std::size_t dim() const { return R.rows(); }
};

// R[i][j] = C[i][j] / (s[i] * s[j]). Every diagonal entry of C must be
// strictly positive; a (numerically) zero diagonal raises ZeroVarianceError
// naming the offending index.
CorrelationMatrix correlation_from_covariance(const CovarianceResult& cov);

struct PcaResult {
    std::vector<double> singular_values;  // nonincreasing, >= 0
    Matrix components;        // left singular vectors of R, one per column
    Matrix right_components;  // right singular vectors; R = U diag(sv) V^T
    std::vector<double> explained;  // sv[i] / sum(sv)
    Matrix scores;                  // M x k, filled by project_scores
    std::size_t k = 0;              // retained component count
    CovMode source_mode = CovMode::gram;
};

struct SvdOptions {
    std::size_t max_sweeps = 100;
    double tolerance = 1e-12;  // relative off-diagonal Frobenius norm
};

// Full SVD of the symmetric correlation matrix via cyclic-by-rows Jacobi
// rotations. Singular values are the absolute eigenvalues, sorted
// nonincreasing (stable, so degenerate values keep their pre-sort order).
// Sign convention: the largest-magnitude entry of each left singular vector
// is positive, ties broken by lowest index, which makes the output
// bit-reproducible for identical input. Throws ConvergenceError carrying the
// residual off-diagonal norm if the sweep cap is hit.
PcaResult svd(const CorrelationMatrix& correlation, const SvdOptions& options = {});

// Smallest k whose cumulative explained fraction reaches `target`.
std::size_t default_component_count(const PcaResult& pca, double target = 0.9);

// Per-image coordinates in the eigenspace, rows in manifest order.
// Gram mode: row i of U_k * diag(sv_k)^(1/2), the image-correlation
// embedding. Pixel mode: U_k^T (phi_j / s), the standardized projection,
// computed chunk-parallel. Requires 1 <= k <= dim and that `pca` came from
// `cov`'s correlation (modes must match).
Matrix project_scores(const DataMatrix& columns, const PcaResult& pca,
                      const CovarianceResult& cov, std::size_t k,
                      unsigned workers = 0);

// <prefix>.json gets singular values and explained fractions; components and
// scores go to <prefix>_components.f64 / <prefix>_scores.f64.
void save_pca(const PcaResult& pca, const std::filesystem::path& prefix);

// scores CSV: image_id,pc1,...,pck (optionally + distance,label columns via
// the triage report writer instead).
void write_scores_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& ids, const Matrix& scores);

}  // namespace cryoreduce

#endif
