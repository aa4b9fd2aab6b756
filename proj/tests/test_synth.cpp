#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "binary_io.hpp"
#include "cryoreduce/covariance.hpp"
#include "cryoreduce/datastore.hpp"
#include "cryoreduce/errors.hpp"
#include "cryoreduce/pca.hpp"
#include "cryoreduce/synth.hpp"
#include "cryoreduce/triage.hpp"
#include "test_util.hpp"

using namespace cryoreduce;

TEST_CASE("fixed seed generates byte-identical output across runs") {
    SynthConfig config;
    config.seed = 99;
    config.good_count = 12;
    config.junk_count = 4;
    config.width = 16;
    config.height = 16;

    const auto dir_a = testutil::scratch("synth_det_a");
    const auto dir_b = testutil::scratch("synth_det_b");
    write_synth_stack(generate_stack(config), dir_a, false);
    write_synth_stack(generate_stack(config), dir_b, false);

    for (const auto& entry : std::filesystem::directory_iterator(dir_a)) {
        const auto name = entry.path().filename();
        CHECK(io::read_file_bytes(entry.path()) == io::read_file_bytes(dir_b / name));
    }
    CHECK(std::filesystem::exists(dir_a / "manifest.csv"));
    CHECK(std::filesystem::exists(dir_a / "truth.json"));
}

TEST_CASE("different seeds differ") {
    SynthConfig a;
    a.seed = 1;
    a.good_count = 4;
    a.junk_count = 0;
    a.width = 8;
    a.height = 8;
    SynthConfig b = a;
    b.seed = 2;
    CHECK(generate_stack(a).images[0].pixels != generate_stack(b).images[0].pixels);
}

TEST_CASE("no junk requested means no junk labels") {
    SynthConfig config;
    config.seed = 5;
    config.good_count = 6;
    config.junk_count = 0;
    config.width = 8;
    config.height = 8;
    const SynthStack stack = generate_stack(config);
    CHECK(std::none_of(stack.is_junk.begin(), stack.is_junk.end(), [](bool b) { return b; }));

    const auto dir = testutil::scratch("synth_nojunk");
    write_synth_stack(stack, dir, false);
    CHECK(load_truth_junk_ids(dir / "truth.json").empty());
}

TEST_CASE("pixel values are exactly float32-representable") {
    SynthConfig config;
    config.seed = 8;
    config.good_count = 3;
    config.junk_count = 3;
    config.width = 8;
    config.height = 8;
    for (const auto& img : generate_stack(config).images)
        for (double v : img.pixels)
            CHECK(static_cast<double>(static_cast<float>(v)) == v);
}

TEST_CASE("config validation") {
    SynthConfig bad;
    bad.width = 2;  // < 4
    CHECK_THROWS_AS(generate_stack(bad), ValidationError);
    SynthConfig empty;
    empty.good_count = 0;
    empty.junk_count = 0;
    CHECK_THROWS_AS(generate_stack(empty), ValidationError);
}

TEST_CASE("junk images score a strictly higher mean robust distance over 5 seeds") {
    for (std::uint64_t seed : {101ull, 102ull, 103ull, 104ull, 105ull}) {
        SynthConfig config;
        config.seed = seed;
        config.good_count = 45;
        config.junk_count = 5;
        config.width = 16;
        config.height = 16;
        const SynthStack stack = generate_stack(config);
        const DataStore store = DataStore::build(
            stack.images, 8, testutil::scratch("synth_sep_" + std::to_string(seed)));

        const DataMatrix columns = center(store, compute_mean(store));
        CovarianceOptions options;
        options.mode = CovMode::gram;
        const CovarianceResult cov = covariance(columns, options);
        PcaResult pca = svd(correlation_from_covariance(cov));
        const std::size_t k = std::max<std::size_t>(default_component_count(pca, 0.9), 1);
        const Matrix scores = project_scores(columns, pca, cov, k);
        const auto distance = robust_distance(scores);

        double good_mean = 0.0, junk_mean = 0.0;
        std::size_t goods = 0, junks = 0;
        for (std::size_t i = 0; i < distance.size(); ++i) {
            if (stack.is_junk[i]) {
                junk_mean += distance[i];
                ++junks;
            } else {
                good_mean += distance[i];
                ++goods;
            }
        }
        good_mean /= static_cast<double>(goods);
        junk_mean /= static_cast<double>(junks);
        CHECK(junk_mean > good_mean);
    }
}
