#include "cryoreduce/pca.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <utility>

#include <json.hpp>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"
#include "cryoreduce/mapreduce.hpp"

namespace cryoreduce {

namespace {

constexpr double kZeroVarianceFloor = 1e-300;

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

CorrelationMatrix correlation_from_covariance(const CovarianceResult& cov) {
    const std::size_t n = cov.C.rows();
    if (n == 0) throw ValidationError("empty covariance matrix");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(cov.C(i, i) > kZeroVarianceFloor))
            throw ZeroVarianceError("zero variance at index " + std::to_string(i) +
                                        " (constant image after centering)",
                                    i);
    }

    CorrelationMatrix corr;
    corr.source_mode = cov.mode;
    corr.R = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            corr.R(i, j) = cov.C(i, j) / (cov.s[i] * cov.s[j]);
    return corr;
}

PcaResult svd(const CorrelationMatrix& correlation, const SvdOptions& options) {
    const std::size_t n = correlation.dim();
    if (n == 0) throw ValidationError("empty correlation matrix");

    Matrix a = correlation.R;        // rotated toward diagonal in place
    Matrix vecs = Matrix::identity(n);
    const double norm = correlation.R.frobenius_norm();
    const double target = options.tolerance * norm;

    // Cyclic-by-rows Jacobi sweeps; one extra polishing sweep after the
    // stopping criterion lands (convergence is quadratic, so that drives the
    // residual to machine zero and keeps eigenvectors clean near small
    // eigenvalues).
    double off = off_diagonal_norm(a);
    std::size_t sweep = 0;
    bool polish = true;
    while ((off > target || std::exchange(polish, false)) && norm > 0.0) {
        if (off > target && sweep++ >= options.max_sweeps)
            throw ConvergenceError("Jacobi sweeps exhausted, off-diagonal norm " +
                                       format_double(off),
                                   off);
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;

                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vecs(k, p);
                    const double vkq = vecs(k, q);
                    vecs(k, p) = c * vkp - s * vkq;
                    vecs(k, q) = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(a);
    }

    // Sort by |eigenvalue|, nonincreasing; stable so repeated values keep
    // their pre-sort order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&a](std::size_t lhs, std::size_t rhs) {
        return std::abs(a(lhs, lhs)) > std::abs(a(rhs, rhs));
    });

    PcaResult result;
    result.source_mode = correlation.source_mode;
    result.singular_values.resize(n);
    result.components = Matrix(n, n);
    result.right_components = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        const double eigenvalue = a(src, src);
        result.singular_values[c] = std::abs(eigenvalue);

        // Column sign: largest-magnitude entry positive, ties at the lowest
        // index. Flipping U and V together preserves U*S*V^T.
        std::size_t arg = 0;
        double best = std::abs(vecs(0, src));
        for (std::size_t k = 1; k < n; ++k) {
            const double mag = std::abs(vecs(k, src));
            if (mag > best) {
                best = mag;
                arg = k;
            }
        }
        const double flip = vecs(arg, src) < 0.0 ? -1.0 : 1.0;
        const double vsign = eigenvalue < 0.0 ? -flip : flip;
        for (std::size_t k = 0; k < n; ++k) {
            result.components(k, c) = flip * vecs(k, src);
            result.right_components(k, c) = vsign * vecs(k, src);
        }
    }

    const double total = std::accumulate(result.singular_values.begin(),
                                         result.singular_values.end(), 0.0);
    result.explained.resize(n);
    for (std::size_t c = 0; c < n; ++c)
        result.explained[c] = total > 0.0 ? result.singular_values[c] / total : 0.0;
    result.k = n;
    return result;
}

std::size_t default_component_count(const PcaResult& pca, double target) {
    double cumulative = 0.0;
    for (std::size_t c = 0; c < pca.explained.size(); ++c) {
        cumulative += pca.explained[c];
        if (cumulative >= target - 1e-12) return c + 1;  // summation roundoff slack
    }
    return pca.explained.empty() ? 0 : pca.explained.size();
}

Matrix project_scores(const DataMatrix& columns, const PcaResult& pca,
                      const CovarianceResult& cov, std::size_t k, unsigned workers) {
    if (pca.source_mode != cov.mode)
        throw ValidationError("PCA result mode (" + to_string(pca.source_mode) +
                              ") does not match covariance mode (" + to_string(cov.mode) + ")");
    const std::size_t dim = pca.components.rows();
    if (k < 1 || k > dim)
        throw ValidationError("component count " + std::to_string(k) +
                              " out of range [1, " + std::to_string(dim) + "]");

    const std::size_t m = columns.image_count();

    if (cov.mode == CovMode::gram) {
        // Image i's embedding: row i of U_k * diag(sv_k)^(1/2).
        Matrix scores(m, k);
        std::vector<double> root(k);
        for (std::size_t c = 0; c < k; ++c) root[c] = std::sqrt(pca.singular_values[c]);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < k; ++c)
                scores(i, c) = pca.components(i, c) * root[c];
        return scores;
    }

    // Pixel mode: standardized projection U_k^T (phi / s), chunk-parallel.
    const std::size_t n = columns.vector_length();
    struct RowBlock {
        std::size_t first = 0;
        std::size_t count = 0;
        std::vector<double> values;  // count * k
    };
    using Partial = std::vector<RowBlock>;

    const DataStore& store = *columns.store;
    auto map_fn = [&columns, &pca, &cov, k, n](std::size_t chunk_index) {
        const Chunk chunk = columns.column_chunk(chunk_index);
        RowBlock block;
        block.first = chunk.first_image;
        block.count = chunk.image_count;
        block.values.resize(chunk.image_count * k);
        std::vector<double> standardized(n);
        for (std::size_t i = 0; i < chunk.image_count; ++i) {
            const auto phi = chunk.image(i);
            for (std::size_t j = 0; j < n; ++j) standardized[j] = phi[j] / cov.s[j];
            for (std::size_t c = 0; c < k; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    acc += pca.components(j, c) * standardized[j];
                block.values[i * k + c] = acc;
            }
        }
        return Partial{std::move(block)};
    };
    auto reduce_fn = [](Partial a, Partial b) {
        a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
        return a;
    };
    const Partial blocks =
        detail::run_indexed<Partial>(store.chunk_count(), map_fn, reduce_fn, Partial{}, workers);

    Matrix scores(m, k);
    for (const auto& block : blocks)
        for (std::size_t i = 0; i < block.count; ++i)
            for (std::size_t c = 0; c < k; ++c)
                scores(block.first + i, c) = block.values[i * k + c];
    return scores;
}

void save_pca(const PcaResult& pca, const std::filesystem::path& prefix) {
    nlohmann::ordered_json meta;
    meta["mode"] = to_string(pca.source_mode);
    meta["dim"] = pca.components.rows();
    meta["k"] = pca.k;
    meta["singular_values"] = pca.singular_values;
    meta["explained"] = pca.explained;
    io::write_file_bytes(prefix.string() + ".json", meta.dump(2) + "\n");

    io::write_f64_le(prefix.string() + "_components.f64", pca.components.storage());
    if (!pca.scores.empty())
        io::write_f64_le(prefix.string() + "_scores.f64", pca.scores.storage());
}

void write_scores_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const Matrix& scores) {
    if (ids.size() != scores.rows())
        throw ValidationError("id count does not match score row count");
    std::string csv = "image_id";
    for (std::size_t c = 0; c < scores.cols(); ++c)
        csv += ",pc" + std::to_string(c + 1);
    csv += "\n";
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        csv += ids[i];
        for (std::size_t c = 0; c < scores.cols(); ++c)
            csv += "," + format_double(scores(i, c));
        csv += "\n";
    }
    io::write_file_bytes(path, csv);
}

}  // namespace cryoreduce
