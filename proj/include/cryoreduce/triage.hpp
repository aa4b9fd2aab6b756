#ifndef CRYOREDUCE_TRIAGE_HPP
#define CRYOREDUCE_TRIAGE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cryoreduce/datastore.hpp"
#include "cryoreduce/matrix.hpp"

namespace cryoreduce {

constexpr double kDefaultTriageThreshold = 3.5;

// Robust per-image distance over score coordinates. Per component c:
//   z_ic = 0.6745 * (score_ic - median_c) / MAD_c      (MAD floored at 1e-12)
//   distance_i = sqrt(sum_c z_ic^2 / k)
// Requires at least 3 images.
std::vector<double> robust_distance(const Matrix& scores);

struct TriageRow {
    std::string id;
    std::vector<double> coords;  // score coordinates, k entries
    double distance = 0.0;
    bool keep = true;
};

struct TriageReport {
    std::vector<TriageRow> rows;  // manifest order
    double threshold = kDefaultTriageThreshold;
    std::size_t k = 0;
    std::int64_t kept_bytes = 0;
    std::int64_t discarded_bytes = 0;
    double kept_fraction = 0.0;  // kept image count / total image count

    std::size_t kept_count() const;
    std::vector<std::string> kept_ids() const;
    std::vector<std::string> discarded_ids() const;
};

// Labels each image KEEP or DISCARD: DISCARD iff robust distance > threshold.
// Byte totals come from the manifest's source sizes and split exactly.
TriageReport classify(const DataStore& store, const Matrix& scores, double threshold);

// CSV rows: image_id,pc1,...,pck,distance,label
void write_triage_csv(const std::filesystem::path& path, const TriageReport& report);

// JSON summary: threshold, k, counts, byte totals, kept fraction.
void write_triage_summary_json(const std::filesystem::path& path, const TriageReport& report);

}  // namespace cryoreduce

#endif
