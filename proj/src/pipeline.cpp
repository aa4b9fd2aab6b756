#include "cryoreduce/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "binary_io.hpp"
#include "cryoreduce/cost.hpp"
#include "cryoreduce/datastore.hpp"
#include "cryoreduce/errors.hpp"
#include "cryoreduce/mapreduce.hpp"
#include "cryoreduce/mrc.hpp"
#include "cryoreduce/object_store.hpp"
#include "cryoreduce/pca.hpp"

namespace cryoreduce {

namespace {

std::string fmt3(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

class StageClock {
public:
    void finish(const std::string& stage) {
        const auto now = std::chrono::steady_clock::now();
        const double seconds = std::chrono::duration<double>(now - last_).count();
        entries_.emplace_back(stage, seconds);
        last_ = now;
    }
    const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, double>> entries_;
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

std::vector<ImageRecord> ingest_inputs(const std::vector<std::string>& inputs) {
    if (inputs.empty()) throw ValidationError("no inputs given");
    std::vector<ImageRecord> records;
    for (const auto& input : inputs) {
        const std::filesystem::path path(input);
        if (!std::filesystem::exists(path)) throw IoError("input not found: " + input);
        std::vector<ImageRecord> batch;
        if (path.extension() == ".mrc" || path.extension() == ".mrcs") {
            batch = load_mrc(path);
        } else if (std::filesystem::is_directory(path)) {
            batch = load_raw_manifest(path / "manifest.csv");
        } else {
            batch = load_raw_manifest(path);
        }
        records.insert(records.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
    }
    return records;
}

std::string vector_bytes_le(const std::vector<double>& values) {
    std::string bytes(values.size() * sizeof(double), '\0');
    if (io::host_little_endian()) {
        std::memcpy(bytes.data(), values.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &values[i], 8);
            bits = io::bswap64(bits);
            std::memcpy(bytes.data() + i * 8, &bits, 8);
        }
    }
    return bytes;
}

nlohmann::ordered_json report_body(const PipelineConfig& config, const TriageReport& report,
                                   std::size_t image_count, std::size_t vector_length,
                                   const std::string& store_descriptor) {
    nlohmann::ordered_json body;
    body["schema_version"] = 1;
    body["tool"] = "cryoreduce";
    body["config"] = {{"mode", to_string(config.mode)},
                      {"center", config.center},
                      {"chunk_images", config.chunk_images},
                      {"threshold", config.threshold},
                      {"seed", config.seed}};
    body["image_count"] = image_count;
    body["vector_length"] = vector_length;
    body["k"] = report.k;
    body["kept_count"] = report.kept_count();
    body["discarded_count"] = report.rows.size() - report.kept_count();
    body["kept_bytes"] = report.kept_bytes;
    body["discarded_bytes"] = report.discarded_bytes;
    body["total_bytes"] = report.kept_bytes + report.discarded_bytes;
    body["kept_fraction"] = report.kept_fraction;
    body["keep_ids"] = report.kept_ids();
    body["discard_ids"] = report.discarded_ids();
    // DISCARD images are never uploaded; they stay in the local work area.
    body["discarded_disposition"] = "retained_locally";
    body["store"] = store_descriptor;
    return body;
}

void attach_pricing(nlohmann::ordered_json& body, const PipelineConfig& config,
                    const TriageReport& report) {
    if (config.pricing_path.empty()) return;
    const auto schemes = load_pricing_config(config.pricing_path);
    nlohmann::ordered_json echo = nlohmann::ordered_json::array();
    for (const auto& s : schemes) {
        echo.push_back({{"name", s.name},
                        {"compute_rate", s.compute_rate.str()},
                        {"upfront", s.upfront.str()},
                        {"storage_rate", s.storage_rate.str()}});
    }
    body["pricing"] = echo;

    // Monthly storage saved by dropping the DISCARD bytes, under the spot
    // scheme's storage rate when present (first scheme otherwise).
    const PricingScheme* scheme = &schemes.front();
    for (const auto& s : schemes)
        if (s.name == "spot") scheme = &s;
    const double total_gb = static_cast<double>(report.kept_bytes + report.discarded_bytes) / 1e9;
    const double kept_gb = static_cast<double>(report.kept_bytes) / 1e9;
    const Money saved =
        reduction_savings(Decimal::from_double(total_gb), Decimal::from_double(kept_gb),
                          scheme->storage_rate, Decimal::from_micros(1'000'000));
    body["storage_savings_per_month"] = {{"scheme", scheme->name},
                                         {"storage_rate", scheme->storage_rate.str()},
                                         {"dollars", saved.str()}};
}

}  // namespace

void write_scatter_svg(const std::filesystem::path& path, const TriageReport& report) {
    constexpr double kWidth = 640.0, kHeight = 480.0, kMargin = 56.0;

    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    bool first = true;
    for (const auto& row : report.rows) {
        const double x = row.coords.empty() ? 0.0 : row.coords[0];
        const double y = row.coords.size() > 1 ? row.coords[1] : 0.0;
        if (first) {
            xmin = xmax = x;
            ymin = ymax = y;
            first = false;
        }
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    const double xpad = (xmax - xmin) == 0.0 ? 1.0 : 0.05 * (xmax - xmin);
    const double ypad = (ymax - ymin) == 0.0 ? 1.0 : 0.05 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    const auto sx = [&](double x) {
        return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2.0 * kMargin);
    };
    const auto sy = [&](double y) {
        return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2.0 * kMargin);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    svg += "<line x1=\"" + fmt3(kMargin) + "\" y1=\"" + fmt3(kHeight - kMargin) + "\" x2=\"" +
           fmt3(kWidth - kMargin) + "\" y2=\"" + fmt3(kHeight - kMargin) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt3(kMargin) + "\" y1=\"" + fmt3(kMargin) + "\" x2=\"" +
           fmt3(kMargin) + "\" y2=\"" + fmt3(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt3(kWidth / 2) + "\" y=\"" + fmt3(kHeight - 16.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">PC1</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt3(kHeight / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
           "transform=\"rotate(-90 18 " +
           fmt3(kHeight / 2) + ")\">PC2</text>\n";

    for (const auto& row : report.rows) {
        const double x = row.coords.empty() ? 0.0 : row.coords[0];
        const double y = row.coords.size() > 1 ? row.coords[1] : 0.0;
        if (row.keep) {
            svg += "<circle cx=\"" + fmt3(sx(x)) + "\" cy=\"" + fmt3(sy(y)) +
                   "\" r=\"3.5\" fill=\"steelblue\" fill-opacity=\"0.8\"/>\n";
        } else {
            const double px = sx(x), py = sy(y);
            svg += "<path d=\"M" + fmt3(px - 3.5) + " " + fmt3(py - 3.5) + " L" +
                   fmt3(px + 3.5) + " " + fmt3(py + 3.5) + " M" + fmt3(px - 3.5) + " " +
                   fmt3(py + 3.5) + " L" + fmt3(px + 3.5) + " " + fmt3(py - 3.5) +
                   "\" stroke=\"crimson\" stroke-width=\"1.8\"/>\n";
        }
    }
    svg += "<text x=\"" + fmt3(kWidth - kMargin) + "\" y=\"" + fmt3(kMargin - 12.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">KEEP o   "
           "DISCARD x</text>\n";
    svg += "</svg>\n";
    io::write_file_bytes(path, svg);
}

TriageReport run_pipeline(const PipelineConfig& config) {
    if (config.out_dir.empty()) throw PipelineError("config", "output directory not set");
    std::filesystem::create_directories(config.out_dir);
    const std::string store_descriptor =
        config.store.empty() ? "local:" + (config.out_dir / "store").string() : config.store;

    StageClock clock;

    // Fig-4-style flow: ingest, reduce, pick, store.
    const std::vector<ImageRecord> records =
        stage("ingest", [&] { return ingest_inputs(config.inputs); });
    const DataStore store = stage("ingest", [&] {
        return DataStore::build(records, config.chunk_images, config.out_dir / "datastore");
    });
    clock.finish("ingest");

    const DataMatrix columns = stage("center", [&] {
        return config.center ? center(store, compute_mean(store, config.workers))
                             : uncentered(store);
    });
    clock.finish("center");

    CovarianceOptions cov_options;
    cov_options.mode = config.mode;
    cov_options.workers = config.workers;
    cov_options.memory_budget_bytes = config.memory_budget_bytes;
    const CovarianceResult cov =
        stage("covariance", [&] { return covariance(columns, cov_options); });
    clock.finish("covariance");

    const CorrelationMatrix corr =
        stage("correlation", [&] { return correlation_from_covariance(cov); });
    clock.finish("correlation");

    PcaResult pca = stage("svd", [&] { return svd(corr); });
    clock.finish("svd");

    const std::size_t k = stage("project", [&] {
        std::size_t want = config.components != 0
                               ? config.components
                               : default_component_count(pca, config.explained_target);
        return std::min(std::max<std::size_t>(want, 1), pca.components.rows());
    });
    pca.scores = stage("project",
                       [&] { return project_scores(columns, pca, cov, k, config.workers); });
    pca.k = k;
    clock.finish("project");

    const TriageReport report =
        stage("triage", [&] { return classify(store, pca.scores, config.threshold); });
    clock.finish("triage");

    // Local artifacts.
    stage("artifacts", [&] {
        write_triage_csv(config.out_dir / "scores.csv", report);
        save_pca(pca, config.out_dir / "pca");
        write_scatter_svg(config.out_dir / "scatter.svg", report);
        return 0;
    });

    nlohmann::ordered_json body = stage("artifacts", [&] {
        auto b = report_body(config, report, store.image_count(), store.vector_length(),
                             store_descriptor);
        attach_pricing(b, config, report);
        return b;
    });

    // Upload KEEP images and the reports; a failure partway leaves
    // report.json recording exactly which keys landed. Keys are reported
    // sorted so sequential and parallel uploads agree.
    stage("store", [&] {
        auto client = open_store(store_descriptor);
        std::vector<std::size_t> keep_indices;
        for (std::size_t i = 0; i < report.rows.size(); ++i)
            if (report.rows[i].keep) keep_indices.push_back(i);

        std::vector<std::string> uploaded;
        std::mutex uploaded_mutex;
        body["uploads"] = {{"complete", false}, {"keys", uploaded}};
        auto upload_one = [&](std::size_t task) {
            const std::size_t i = keep_indices[task];
            const std::string key = "keep/" + report.rows[i].id + ".f64";
            client->put(key, vector_bytes_le(store.read_image(i)));
            std::lock_guard<std::mutex> lock(uploaded_mutex);
            uploaded.push_back(key);
            return 0;
        };
        try {
            if (config.parallel_uploads) {
                detail::run_indexed<int>(
                    keep_indices.size(), upload_one, [](int, int) { return 0; }, 0,
                    config.workers);
            } else {
                for (std::size_t t = 0; t < keep_indices.size(); ++t) upload_one(t);
            }
            std::sort(uploaded.begin(), uploaded.end());
            body["uploads"]["keys"] = uploaded;
            body["uploads"]["complete"] = true;
            io::write_file_bytes(config.out_dir / "report.json", body.dump(2) + "\n");

            client->put("reports/scores.csv",
                        io::read_file_bytes(config.out_dir / "scores.csv"));
            client->put("reports/report.json",
                        io::read_file_bytes(config.out_dir / "report.json"));
            client->put("reports/scatter.svg",
                        io::read_file_bytes(config.out_dir / "scatter.svg"));
        } catch (...) {
            std::sort(uploaded.begin(), uploaded.end());
            body["uploads"]["keys"] = uploaded;
            body["uploads"]["complete"] = false;
            io::write_file_bytes(config.out_dir / "report.json", body.dump(2) + "\n");
            throw;
        }
        return 0;
    });
    clock.finish("store");

    // Wall-clock timings are the one run-dependent output, so they live in
    // their own file and report.json stays byte-reproducible.
    nlohmann::ordered_json timings;
    timings["workers"] = config.workers == 0 ? default_worker_count() : config.workers;
    auto& stages = timings["stages"] = nlohmann::ordered_json::array();
    for (const auto& [name, seconds] : clock.entries())
        stages.push_back({{"stage", name}, {"seconds", seconds}});
    io::write_file_bytes(config.out_dir / "timings.json", timings.dump(2) + "\n");

    return report;
}

}  // namespace cryoreduce
