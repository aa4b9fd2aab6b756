#ifndef CRYOREDUCE_PIPELINE_HPP
#define CRYOREDUCE_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cryoreduce/covariance.hpp"
#include "cryoreduce/triage.hpp"

namespace cryoreduce {

struct PipelineConfig {
    std::vector<std::string> inputs;  // .mrc files and/or raw manifest .csv files
    std::size_t chunk_images = 16;
    unsigned workers = 0;  // 0 = logical CPU count
    CovMode mode = CovMode::gram;
    bool center = true;
    std::size_t components = 0;        // 0 = pick by explained fraction
    double explained_target = 0.9;
    double threshold = kDefaultTriageThreshold;
    std::string pricing_path;          // optional; echoed into the report
    std::filesystem::path out_dir;
    std::string store;                 // backend descriptor; default <out>/store
    std::uint64_t seed = 0;            // echoed into the report
    std::uint64_t memory_budget_bytes = 2ull << 30;
    bool parallel_uploads = false;     // KEEP images upload sequentially by default
};

// Ingest -> center -> covariance -> correlation -> SVD -> project ->
// classify -> upload. Emits scores.csv, report.json and scatter.svg under
// out_dir, uploads KEEP images and the three reports through the object
// store, and returns the triage report. All CSV/JSON artifacts are
// byte-deterministic for a fixed config and input at any worker count
// (wall-clock timings go to a separate timings.json for that reason).
// Stage failures raise PipelineError tagged with the stage name; if an
// upload fails partway, report.json is rewritten with the keys that did
// land before the error propagates.
TriageReport run_pipeline(const PipelineConfig& config);

// PC1/PC2 scatter with DISCARD points marked; fixed canvas, no timestamps.
void write_scatter_svg(const std::filesystem::path& path, const TriageReport& report);

}  // namespace cryoreduce

#endif
