#ifndef CRYOREDUCE_TESTS_ORACLES_HPP
#define CRYOREDUCE_TESTS_ORACLES_HPP

// Reference implementations the test suites check the library against.
// Everything here is deliberately written the slow, obvious way and shares
// no code with the library paths it verifies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "cryoreduce/image.hpp"
#include "cryoreduce/matrix.hpp"

namespace oracles {

using cryoreduce::ImageRecord;
using cryoreduce::Matrix;

// ---- sequential statistics ------------------------------------------------

inline std::vector<double> direct_mean(const std::vector<std::vector<double>>& columns) {
    const std::size_t n = columns.front().size();
    std::vector<double> mean(n, 0.0);
    for (const auto& col : columns)
        for (std::size_t j = 0; j < n; ++j) mean[j] += col[j];
    for (double& v : mean) v /= static_cast<double>(columns.size());
    return mean;
}

inline std::vector<std::vector<double>> centered_columns(
    const std::vector<std::vector<double>>& columns) {
    const auto mean = direct_mean(columns);
    auto out = columns;
    for (auto& col : out)
        for (std::size_t j = 0; j < col.size(); ++j) col[j] -= mean[j];
    return out;
}

// C = sum_j phi_j phi_j^T, one flat loop, no chunking.
inline Matrix direct_covariance_pixel(const std::vector<std::vector<double>>& columns) {
    const std::size_t n = columns.front().size();
    Matrix c(n, n);
    for (const auto& phi : columns)
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t s = 0; s < n; ++s) c(r, s) += phi[r] * phi[s];
    return c;
}

// C[i][j] = phi_i . phi_j, double loop.
inline Matrix direct_covariance_gram(const std::vector<std::vector<double>>& columns) {
    const std::size_t m = columns.size();
    Matrix c(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t v = 0; v < columns[i].size(); ++v)
                acc += columns[i][v] * columns[j][v];
            c(i, j) = acc;
        }
    }
    return c;
}

// ---- eigen decomposition ---------------------------------------------------

struct EigenResult {
    std::vector<double> values;  // sorted by |value| descending
    Matrix vectors;              // matching columns
};

// Classic threshold Jacobi with a warm-up schedule, in the style of the
// textbook routine. Independent of the library's cyclic-by-rows sweep.
inline EigenResult oracle_jacobi(Matrix a, std::size_t max_iterations = 100) {
    const std::size_t n = a.rows();
    Matrix v = Matrix::identity(n);

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        double off_sum = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off_sum += std::abs(a(p, q));
        if (off_sum == 0.0) break;
        const double threshold =
            iter < 3 ? 0.2 * off_sum / static_cast<double>(n * n) : 0.0;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= threshold) continue;
                const double diff = a(q, q) - a(p, p);
                double t;
                if (std::abs(apq) < 1e-300 * std::abs(diff)) {
                    t = apq / diff;
                } else {
                    const double theta = diff / (2.0 * apq);
                    t = 1.0 / (std::abs(theta) + std::hypot(1.0, theta));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double h = t * apq;

                a(p, p) -= h;
                a(q, q) += h;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != p && k != q) {
                        const double akp = a(k, p);
                        const double akq = a(k, q);
                        a(k, p) = akp - s * (akq + akp * tau);
                        a(k, q) = akq + s * (akp - akq * tau);
                        a(p, k) = a(k, p);
                        a(q, k) = a(k, q);
                    }
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = vkp - s * (vkq + vkp * tau);
                    v(k, q) = vkq + s * (vkp - vkq * tau);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&a](std::size_t l, std::size_t r) {
        return std::abs(a(l, l)) > std::abs(a(r, r));
    });

    EigenResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = v(k, order[c]);
    }
    return out;
}

// ---- robust statistics -----------------------------------------------------

inline double sorted_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Direct two-pass median/MAD distance.
inline std::vector<double> oracle_robust_distance(const Matrix& scores) {
    const std::size_t m = scores.rows();
    const std::size_t k = scores.cols();
    std::vector<double> sq(m, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> col(m);
        for (std::size_t i = 0; i < m; ++i) col[i] = scores(i, c);
        const double med = sorted_median(col);
        std::vector<double> dev(m);
        for (std::size_t i = 0; i < m; ++i) dev[i] = std::abs(col[i] - med);
        const double mad = std::max(sorted_median(dev), 1e-12);
        for (std::size_t i = 0; i < m; ++i) {
            const double z = 0.6745 * (col[i] - med) / mad;
            sq[i] += z * z;
        }
    }
    std::vector<double> d(m);
    for (std::size_t i = 0; i < m; ++i) d[i] = std::sqrt(sq[i] / static_cast<double>(k));
    return d;
}

// ---- random test data -------------------------------------------------------

inline std::vector<ImageRecord> random_stack(std::mt19937& rng, std::size_t count,
                                             std::size_t width, std::size_t height) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<ImageRecord> records;
    records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ImageRecord rec;
        rec.id = "rand-" + std::to_string(i);
        rec.width = width;
        rec.height = height;
        rec.pixels.resize(width * height);
        for (double& v : rec.pixels) v = dist(rng);
        rec.source = "memory";
        rec.frame = static_cast<std::int64_t>(i);
        rec.source_bytes = static_cast<std::int64_t>(width * height * sizeof(double));
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<std::vector<double>> record_columns(const std::vector<ImageRecord>& records) {
    std::vector<std::vector<double>> columns;
    columns.reserve(records.size());
    for (const auto& rec : records) columns.push_back(rec.pixels);
    return columns;
}

// Random symmetric PSD matrix with strictly positive diagonal: G^T G + eps I.
inline Matrix random_psd(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(i, j) = dist(rng);
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += g(k, i) * g(k, j);
            c(i, j) = acc;
        }
    for (std::size_t i = 0; i < n; ++i) c(i, i) += 0.05;
    return c;
}

inline double rel_frobenius_gap(const Matrix& a, const Matrix& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double d = a(i, j) - b(i, j);
            num += d * d;
            den += a(i, j) * a(i, j);
        }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace oracles

#endif
