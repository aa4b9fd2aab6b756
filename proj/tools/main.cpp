#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cryoreduce/cost.hpp"
#include "cryoreduce/covariance.hpp"
#include "cryoreduce/datastore.hpp"
#include "cryoreduce/errors.hpp"
#include "cryoreduce/mapreduce.hpp"
#include "cryoreduce/mrc.hpp"
#include "cryoreduce/pca.hpp"
#include "cryoreduce/pipeline.hpp"
#include "cryoreduce/synth.hpp"
#include "cryoreduce/triage.hpp"

namespace {

using namespace cryoreduce;

struct ScoresCsv {
    std::vector<std::string> ids;
    Matrix scores;
};

// Reads the id,pc1..pck[,distance,label] CSV back; extra columns after the
// pcN block are ignored.
ScoresCsv read_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty scores file: " + path.string());

    std::size_t k = 0;
    {
        std::stringstream ss(header);
        std::string field;
        while (std::getline(ss, field, ',')) {
            if (field.rfind("pc", 0) == 0) ++k;
        }
    }
    if (k == 0) throw FormatError("no pc columns in " + path.string());

    std::vector<std::string> ids;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        ids.push_back(field);
        for (std::size_t c = 0; c < k; ++c) {
            if (!std::getline(ss, field, ','))
                throw FormatError("short row in " + path.string());
            values.push_back(std::stod(field));
        }
    }
    ScoresCsv out;
    out.ids = std::move(ids);
    out.scores = Matrix(out.ids.size(), k);
    out.scores.storage() = std::move(values);
    return out;
}

int cmd_synth_gen(std::uint64_t seed, std::size_t good, std::size_t junk, std::size_t width,
                  std::size_t height, const std::string& out, bool as_mrc) {
    SynthConfig config{seed, good, junk, width, height};
    const SynthStack stack = generate_stack(config);
    write_synth_stack(stack, out, as_mrc);
    std::printf("wrote %zu images (%zu good, %zu junk) to %s\n", stack.images.size(),
                good, junk, out.c_str());
    return 0;
}

int cmd_ingest(const std::vector<std::string>& inputs, std::size_t chunk_images,
               const std::string& out) {
    std::vector<ImageRecord> records;
    for (const auto& input : inputs) {
        const std::filesystem::path path(input);
        std::vector<ImageRecord> batch;
        if (path.extension() == ".mrc" || path.extension() == ".mrcs")
            batch = load_mrc(path);
        else if (std::filesystem::is_directory(path))
            batch = load_raw_manifest(path / "manifest.csv");
        else
            batch = load_raw_manifest(path);
        records.insert(records.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
    }
    const DataStore store = DataStore::build(records, chunk_images, out);
    std::printf("datastore: %zu images, vector length %zu, %zu chunks, %lld source bytes\n",
                store.image_count(), store.vector_length(), store.chunk_count(),
                static_cast<long long>(store.total_source_bytes()));
    return 0;
}

int cmd_reduce(const std::string& input, const std::string& mode_name, unsigned workers,
               bool no_center, std::size_t components, double explained, const std::string& out,
               bool save_cov, std::uint64_t budget_mb) {
    const DataStore store = DataStore::open(input);
    const DataMatrix columns =
        no_center ? uncentered(store) : center(store, compute_mean(store, workers));

    CovarianceOptions options;
    options.mode = cov_mode_from_string(mode_name);
    options.workers = workers;
    options.memory_budget_bytes = budget_mb << 20;
    const CovarianceResult cov = covariance(columns, options);

    const std::filesystem::path out_dir(out);
    std::filesystem::create_directories(out_dir);
    if (save_cov) save_covariance(cov, out_dir / "covariance");

    PcaResult pca = svd(correlation_from_covariance(cov));
    std::size_t k = components != 0 ? components : default_component_count(pca, explained);
    k = std::min(std::max<std::size_t>(k, 1), pca.components.rows());
    pca.scores = project_scores(columns, pca, cov, k, workers);
    pca.k = k;

    save_pca(pca, out_dir / "pca");
    std::vector<std::string> ids;
    for (const auto& meta : store.manifest()) ids.push_back(meta.id);
    write_scores_csv(out_dir / "scores.csv", ids, pca.scores);

    std::printf("pca: %zu x %zu scores, k=%zu, top singular value %.6g\n", pca.scores.rows(),
                pca.scores.cols(), k, pca.singular_values.empty() ? 0.0 : pca.singular_values[0]);
    return 0;
}

int cmd_triage(const std::string& input, const std::string& scores_path, double threshold,
               const std::string& out) {
    const DataStore store = DataStore::open(input);
    const ScoresCsv scores = read_scores_csv(scores_path);
    if (scores.ids.size() != store.image_count())
        throw ValidationError("scores row count does not match the datastore");
    const TriageReport report = classify(store, scores.scores, threshold);

    const std::filesystem::path out_dir(out);
    std::filesystem::create_directories(out_dir);
    write_triage_csv(out_dir / "triage.csv", report);
    write_triage_summary_json(out_dir / "triage.json", report);
    std::printf("triage: kept %zu / %zu images (%.1f%%), discarded %lld bytes\n",
                report.kept_count(), report.rows.size(), 100.0 * report.kept_fraction,
                static_cast<long long>(report.discarded_bytes));
    return 0;
}

int cmd_cost(const std::string& pricing, const std::string& data_gb, const std::string& hours,
             std::int64_t instances, const std::string& months, double bid, double price,
             const std::string& before_gb, const std::string& after_gb) {
    const auto schemes = load_pricing_config(pricing);
    Workload workload;
    workload.data_gb = Decimal::parse(data_gb);
    workload.compute_hours = Decimal::parse(hours);
    workload.instance_count = instances;
    workload.storage_months = Decimal::parse(months);

    const auto ranked = compare(schemes, workload);
    std::printf("%-10s %12s %12s %12s %12s %9s\n", "scheme", "compute", "storage", "upfront",
                "total", "savings");
    for (const auto& entry : ranked) {
        std::printf("%-10s %12s %12s %12s %12s %8.2f%%\n", entry.estimate.scheme.c_str(),
                    entry.estimate.compute.str().c_str(), entry.estimate.storage.str().c_str(),
                    entry.estimate.upfront.str().c_str(), entry.estimate.total.str().c_str(),
                    entry.savings_pct);
    }

    if (bid >= 0.0 && price >= 0.0) {
        const SpotDecision d = spot_decision(bid, price);
        std::printf("spot decision: bid %.4f vs price %.4f -> %s\n", bid, price,
                    d == SpotDecision::Start ? "Start" : "Terminate");
    }
    if (!before_gb.empty() && !after_gb.empty()) {
        const PricingScheme& scheme = find_scheme(schemes, "spot");
        const Money saved = reduction_savings(Decimal::parse(before_gb), Decimal::parse(after_gb),
                                              scheme.storage_rate, workload.storage_months);
        std::printf("storage savings %s GB -> %s GB over %s months: $%s\n", before_gb.c_str(),
                    after_gb.c_str(), months.c_str(), saved.str().c_str());
    }
    return 0;
}

int cmd_run(PipelineConfig config) {
    const TriageReport report = run_pipeline(config);
    std::printf("pipeline done: kept %zu / %zu images, report at %s\n", report.kept_count(),
                report.rows.size(), (config.out_dir / "report.json").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chunked map-reduce PCA triage for cryo-EM image stacks"};
    app.require_subcommand(1);

    // synth gen
    auto* synth = app.add_subcommand("synth", "Synthetic stack generation");
    synth->require_subcommand(1);
    auto* gen = synth->add_subcommand("gen", "Generate a seeded synthetic stack");
    std::uint64_t seed = 1;
    std::size_t good = 90, junk = 10, width = 32, height = 32;
    std::string gen_out = "synth_stack";
    bool as_mrc = false;
    gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--good", good, "Structured image count");
    gen->add_option("--junk", junk, "Junk image count");
    gen->add_option("--width", width, "Image width in pixels");
    gen->add_option("--height", height, "Image height in pixels");
    gen->add_option("--out", gen_out, "Output directory");
    gen->add_flag("--mrc", as_mrc, "Write one MRC stack instead of raw float64 files");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Build a chunked datastore from images");
    std::vector<std::string> ingest_inputs;
    std::size_t chunk_images = 16;
    std::string ingest_out = "datastore";
    ingest->add_option("--input", ingest_inputs, "MRC files or raw manifest files/dirs")
        ->required();
    ingest->add_option("--chunk-size", chunk_images, "Images per chunk");
    ingest->add_option("--out", ingest_out, "Datastore directory");

    // reduce
    auto* reduce = app.add_subcommand("reduce", "Covariance, correlation, SVD and scores");
    std::string reduce_input = "datastore", reduce_mode = "gram", reduce_out = "reduce_out";
    unsigned workers = 0;
    bool no_center = false, save_cov = false;
    std::size_t components = 0;
    double explained = 0.9;
    std::uint64_t budget_mb = 2048;
    reduce->add_option("--input", reduce_input, "Datastore directory")->required();
    reduce->add_option("--mode", reduce_mode, "Covariance mode: gram or pixel");
    reduce->add_option("--workers", workers, "Parallel workers (0 = logical CPUs)");
    reduce->add_flag("--no-center", no_center, "Skip mean subtraction");
    reduce->add_option("--components", components, "Retained components (0 = by explained)");
    reduce->add_option("--explained", explained, "Explained-fraction target for k");
    reduce->add_option("--out", reduce_out, "Output directory");
    reduce->add_flag("--save-cov", save_cov, "Also persist the covariance matrix");
    reduce->add_option("--budget-mb", budget_mb, "Memory budget in MiB");

    // triage
    auto* triage = app.add_subcommand("triage", "Label images KEEP or DISCARD from scores");
    std::string triage_input = "datastore", triage_scores, triage_out = "triage_out";
    double threshold = kDefaultTriageThreshold;
    triage->add_option("--input", triage_input, "Datastore directory")->required();
    triage->add_option("--scores", triage_scores, "scores.csv from reduce")->required();
    triage->add_option("--threshold", threshold, "Robust-distance cut");
    triage->add_option("--out", triage_out, "Output directory");

    // cost
    auto* cost = app.add_subcommand("cost", "Price a workload under the configured schemes");
    std::string pricing = "pricing.sample", data_gb = "2000", hours = "60.8", months = "1";
    std::int64_t instances = 200;
    double bid = -1.0, price = -1.0;
    std::string before_gb, after_gb;
    cost->add_option("--pricing", pricing, "Pricing config (JSON)");
    cost->add_option("--data-gb", data_gb, "Stored data in GB");
    cost->add_option("--hours", hours, "Compute hours");
    cost->add_option("--instances", instances, "Instance count");
    cost->add_option("--months", months, "Storage months");
    cost->add_option("--bid", bid, "Spot bid in dollars/hour");
    cost->add_option("--price", price, "Current spot price in dollars/hour");
    cost->add_option("--before-gb", before_gb, "Data size before triage, GB");
    cost->add_option("--after-gb", after_gb, "Data size after triage, GB");

    // run
    auto* run_cmd = app.add_subcommand("run", "Full pipeline: ingest, reduce, pick, store");
    PipelineConfig config;
    std::string run_mode = "gram", run_out = "pipeline_out", run_store;
    bool run_no_center = false;
    double run_threshold = kDefaultTriageThreshold;
    bool threshold_inf = false;
    run_cmd->add_option("--input", config.inputs, "MRC files or raw manifest files/dirs")
        ->required();
    run_cmd->add_option("--chunk-size", config.chunk_images, "Images per chunk");
    run_cmd->add_option("--workers", config.workers, "Parallel workers (0 = logical CPUs)");
    run_cmd->add_option("--mode", run_mode, "Covariance mode: gram or pixel");
    run_cmd->add_flag("--no-center", run_no_center, "Skip mean subtraction");
    run_cmd->add_option("--components", config.components,
                        "Retained components (0 = by explained)");
    run_cmd->add_option("--explained", config.explained_target,
                        "Explained-fraction target for k");
    run_cmd->add_option("--threshold", run_threshold, "Robust-distance cut");
    run_cmd->add_flag("--keep-all", threshold_inf, "Disable discarding (threshold = +inf)");
    run_cmd->add_option("--pricing", config.pricing_path, "Pricing config to echo into report");
    run_cmd->add_option("--store", run_store, "Object store descriptor (local:<dir>)");
    run_cmd->add_option("--out", run_out, "Output directory");
    run_cmd->add_option("--seed", config.seed, "Seed echoed into the report");
    run_cmd->add_flag("--parallel-uploads", config.parallel_uploads,
                      "Upload KEEP images in parallel");
    std::uint64_t run_budget_mb = 2048;
    run_cmd->add_option("--budget-mb", run_budget_mb, "Memory budget in MiB");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_synth_gen(seed, good, junk, width, height, gen_out, as_mrc);
        if (ingest->parsed()) return cmd_ingest(ingest_inputs, chunk_images, ingest_out);
        if (reduce->parsed())
            return cmd_reduce(reduce_input, reduce_mode, workers, no_center, components,
                              explained, reduce_out, save_cov, budget_mb);
        if (triage->parsed()) return cmd_triage(triage_input, triage_scores, threshold, triage_out);
        if (cost->parsed())
            return cmd_cost(pricing, data_gb, hours, instances, months, bid, price, before_gb,
                            after_gb);
        if (run_cmd->parsed()) {
            config.mode = cov_mode_from_string(run_mode);
            config.center = !run_no_center;
            config.threshold =
                threshold_inf ? std::numeric_limits<double>::infinity() : run_threshold;
            config.out_dir = run_out;
            config.store = run_store;
            config.memory_budget_bytes = run_budget_mb << 20;
            return cmd_run(config);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
