#include "cryoreduce/triage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"

namespace cryoreduce {

namespace {

constexpr double kMadFloor = 1e-12;
constexpr double kNormalConsistency = 0.6745;  // MAD -> sigma for a normal population

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::vector<double> robust_distance(const Matrix& scores) {
    const std::size_t m = scores.rows();
    const std::size_t k = scores.cols();
    if (m < 3) throw ValidationError("robust distance needs at least 3 images, got " +
                                     std::to_string(m));
    if (k < 1) throw ValidationError("robust distance needs at least 1 component");

    std::vector<double> sq_sum(m, 0.0);
    std::vector<double> column(m);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < m; ++i) column[i] = scores(i, c);
        std::vector<double> tmp = column;
        const double med = median_inplace(tmp);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = std::abs(column[i] - med);
        const double mad = std::max(median_inplace(tmp), kMadFloor);
        for (std::size_t i = 0; i < m; ++i) {
            const double z = kNormalConsistency * (column[i] - med) / mad;
            sq_sum[i] += z * z;
        }
    }

    std::vector<double> distance(m);
    for (std::size_t i = 0; i < m; ++i)
        distance[i] = std::sqrt(sq_sum[i] / static_cast<double>(k));
    return distance;
}

std::size_t TriageReport::kept_count() const {
    std::size_t n = 0;
    for (const auto& row : rows) n += row.keep ? 1 : 0;
    return n;
}

std::vector<std::string> TriageReport::kept_ids() const {
    std::vector<std::string> ids;
    for (const auto& row : rows)
        if (row.keep) ids.push_back(row.id);
    return ids;
}

std::vector<std::string> TriageReport::discarded_ids() const {
    std::vector<std::string> ids;
    for (const auto& row : rows)
        if (!row.keep) ids.push_back(row.id);
    return ids;
}

TriageReport classify(const DataStore& store, const Matrix& scores, double threshold) {
    if (!(threshold > 0.0)) throw ValidationError("threshold must be > 0");
    if (scores.rows() != store.image_count())
        throw ValidationError("score rows " + std::to_string(scores.rows()) +
                              " != image count " + std::to_string(store.image_count()));

    const std::vector<double> distance = robust_distance(scores);

    TriageReport report;
    report.threshold = threshold;
    report.k = scores.cols();
    report.rows.reserve(store.image_count());
    for (std::size_t i = 0; i < store.image_count(); ++i) {
        const ImageMeta& meta = store.manifest()[i];
        TriageRow row;
        row.id = meta.id;
        row.coords.assign(scores.row(i).begin(), scores.row(i).end());
        row.distance = distance[i];
        row.keep = !(distance[i] > threshold);
        if (row.keep)
            report.kept_bytes += meta.source_bytes;
        else
            report.discarded_bytes += meta.source_bytes;
        report.rows.push_back(std::move(row));
    }
    report.kept_fraction = static_cast<double>(report.kept_count()) /
                           static_cast<double>(report.rows.size());
    return report;
}

void write_triage_csv(const std::filesystem::path& path, const TriageReport& report) {
    std::string csv = "image_id";
    for (std::size_t c = 0; c < report.k; ++c) csv += ",pc" + std::to_string(c + 1);
    csv += ",distance,label\n";
    for (const auto& row : report.rows) {
        csv += row.id;
        for (double v : row.coords) csv += "," + format_double(v);
        csv += "," + format_double(row.distance);
        csv += row.keep ? ",KEEP\n" : ",DISCARD\n";
    }
    io::write_file_bytes(path, csv);
}

void write_triage_summary_json(const std::filesystem::path& path, const TriageReport& report) {
    nlohmann::ordered_json summary;
    summary["threshold"] = report.threshold;
    summary["k"] = report.k;
    summary["image_count"] = report.rows.size();
    summary["kept_count"] = report.kept_count();
    summary["discarded_count"] = report.rows.size() - report.kept_count();
    summary["kept_bytes"] = report.kept_bytes;
    summary["discarded_bytes"] = report.discarded_bytes;
    summary["kept_fraction"] = report.kept_fraction;
    io::write_file_bytes(path, summary.dump(2) + "\n");
}

}  // namespace cryoreduce
