#include "cryoreduce/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"
#include "cryoreduce/mrc.hpp"
#include "cryoreduce/rng.hpp"

namespace cryoreduce {

namespace {

using Field = std::vector<double>;

double rms(const Field& f) {
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(s / static_cast<double>(f.size()));
}

void normalize_rms(Field& f) {
    const double r = rms(f);
    if (r > 0.0)
        for (double& v : f) v /= r;
}

// Remove the component of f along g (assumes g has unit RMS up to scale).
void orthogonalize(Field& f, const Field& g) {
    double fg = 0.0, gg = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        fg += f[i] * g[i];
        gg += g[i] * g[i];
    }
    if (gg == 0.0) return;
    const double coef = fg / gg;
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= coef * g[i];
}

// Sum of a few low-frequency cosine waves; the smooth "specimen" textures.
Field smooth_field(Rng& rng, std::size_t width, std::size_t height) {
    Field f(width * height, 0.0);
    for (int wave = 0; wave < 3; ++wave) {
        const double fx = 1.0 + std::floor(rng.uniform(0.0, 3.0));
        const double fy = 1.0 + std::floor(rng.uniform(0.0, 3.0));
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amp = rng.uniform(0.5, 1.0);
        for (std::size_t r = 0; r < height; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                const double u = static_cast<double>(c) / static_cast<double>(width);
                const double v = static_cast<double>(r) / static_cast<double>(height);
                f[r * width + c] += amp * std::cos(2.0 * std::numbers::pi * (fx * u + fy * v) + phase);
            }
        }
    }
    return f;
}

// Steep ramp plus a fine checker: the shared "carbon edge" texture junk
// images carry.
Field carbon_field(Rng& rng, std::size_t width, std::size_t height) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Field f(width * height, 0.0);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double u = static_cast<double>(c) / static_cast<double>(width - 1) - 0.5;
            const double v = static_cast<double>(r) / static_cast<double>(height - 1) - 0.5;
            const double ramp = std::cos(theta) * u + std::sin(theta) * v;
            const double checker = ((r / 2 + c / 2) % 2 == 0) ? 0.35 : -0.35;
            f[r * width + c] = 2.0 * ramp + checker;
        }
    }
    return f;
}

void add_blob(Field& f, std::size_t width, std::size_t height, Rng& rng) {
    const double cx = rng.uniform(0.15, 0.85) * static_cast<double>(width);
    const double cy = rng.uniform(0.15, 0.85) * static_cast<double>(height);
    const double amp = 0.25 * (0.5 + rng.uniform());
    const double sigma = (0.08 + 0.04 * rng.uniform()) * static_cast<double>(width);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double dx = static_cast<double>(c) - cx;
            const double dy = static_cast<double>(r) - cy;
            f[r * width + c] += amp * std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
}

void quantize_to_float32(Field& f) {
    for (double& v : f) v = static_cast<double>(static_cast<float>(v));
}

std::string image_id(std::size_t index) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "img-%04zu", index);
    return buf;
}

}  // namespace

SynthStack generate_stack(const SynthConfig& config) {
    if (config.width < 4 || config.height < 4)
        throw ValidationError("synthetic images need dimensions >= 4");
    const std::size_t total = config.good_count + config.junk_count;
    if (total == 0) throw ValidationError("synthetic stack needs at least one image");

    Rng rng(config.seed);
    const std::size_t w = config.width;
    const std::size_t h = config.height;
    const std::size_t n = w * h;

    // Two shared specimen textures for good images, one shared contamination
    // texture for junk; mutually orthogonal so the stacks separate cleanly.
    Field pattern_a = smooth_field(rng, w, h);
    normalize_rms(pattern_a);
    Field pattern_b = smooth_field(rng, w, h);
    orthogonalize(pattern_b, pattern_a);
    normalize_rms(pattern_b);
    Field carbon = carbon_field(rng, w, h);
    orthogonalize(carbon, pattern_a);
    orthogonalize(carbon, pattern_b);
    normalize_rms(carbon);

    // Deterministic interleave of good and junk slots.
    std::vector<bool> is_junk(total, false);
    std::fill(is_junk.begin(), is_junk.begin() + static_cast<std::ptrdiff_t>(config.junk_count),
              true);
    for (std::size_t i = total - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i + 1));
        std::swap(is_junk[i], is_junk[j]);
    }

    SynthStack stack;
    stack.images.reserve(total);
    stack.is_junk = is_junk;

    std::size_t junk_seen = 0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        Field pixels(n, 0.0);
        if (!is_junk[idx]) {
            const double wa = 1.0 + 0.05 * rng.normal();
            const double wb = 0.5 + 0.05 * rng.normal();
            for (std::size_t i = 0; i < n; ++i)
                pixels[i] = wa * pattern_a[i] + wb * pattern_b[i];
            const std::size_t blob_count = 2 + static_cast<std::size_t>(rng.uniform_index(3));
            for (std::size_t b = 0; b < blob_count; ++b) add_blob(pixels, w, h, rng);
            for (std::size_t i = 0; i < n; ++i) pixels[i] += rng.normal(0.0, 0.05);
        } else if (junk_seen++ % 2 == 0) {
            // Contaminated region: strong shared carbon texture under heavy
            // structureless noise.
            const double wc = 1.2 * (0.8 + 0.3 * rng.uniform());
            for (std::size_t i = 0; i < n; ++i)
                pixels[i] = wc * carbon[i] + rng.uniform(-1.0, 1.0);
        } else {
            // Carbon edge: the shared texture plus a steep random gradient.
            const double wc = 1.5 + 0.5 * rng.uniform();
            const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t c = 0; c < w; ++c) {
                    const double u = static_cast<double>(c) / static_cast<double>(w - 1) - 0.5;
                    const double v = static_cast<double>(r) / static_cast<double>(h - 1) - 0.5;
                    pixels[r * w + c] = wc * carbon[r * w + c] +
                                        1.0 * (std::cos(theta) * u + std::sin(theta) * v) +
                                        rng.normal(0.0, 0.1);
                }
            }
        }
        quantize_to_float32(pixels);

        ImageRecord rec;
        rec.id = image_id(idx);
        rec.width = w;
        rec.height = h;
        rec.pixels = std::move(pixels);
        rec.source = "synth:" + std::to_string(config.seed);
        rec.frame = static_cast<std::int64_t>(idx);
        rec.source_bytes = static_cast<std::int64_t>(n * sizeof(double));
        stack.images.push_back(std::move(rec));
    }
    return stack;
}

void write_synth_stack(const SynthStack& stack, const std::filesystem::path& out_dir,
                       bool as_mrc) {
    std::filesystem::create_directories(out_dir);

    // Labels keyed by the ids the stack will carry after ingest: raw files
    // keep the generated ids, an MRC stack gets "<stem>-NNNN" frame ids.
    nlohmann::ordered_json labels;
    std::string manifest_csv;

    if (as_mrc) {
        write_mrc(out_dir / "stack.mrc", stack.images, MrcHeader::kModeFloat32, false);
        for (std::size_t i = 0; i < stack.images.size(); ++i) {
            char id[24];
            std::snprintf(id, sizeof(id), "stack-%04zu", i);
            labels[id] = stack.is_junk[i] ? "junk" : "good";
        }
    } else {
        for (std::size_t i = 0; i < stack.images.size(); ++i) {
            const ImageRecord& img = stack.images[i];
            const std::string file = img.id + ".f64";
            io::write_f64_le(out_dir / file, img.pixels);
            manifest_csv += img.id + "," + std::to_string(img.width) + "," +
                            std::to_string(img.height) + "," + file + "\n";
            labels[img.id] = stack.is_junk[i] ? "junk" : "good";
        }
        io::write_file_bytes(out_dir / "manifest.csv", manifest_csv);
    }

    const auto junk_total = static_cast<std::size_t>(
        std::count(stack.is_junk.begin(), stack.is_junk.end(), true));
    nlohmann::ordered_json truth;
    truth["schema_version"] = 1;
    truth["good_count"] = stack.images.size() - junk_total;
    truth["junk_count"] = junk_total;
    truth["labels"] = labels;
    io::write_file_bytes(out_dir / "truth.json", truth.dump(2) + "\n");
}

std::vector<std::string> load_truth_junk_ids(const std::filesystem::path& truth_json) {
    nlohmann::json truth;
    try {
        truth = nlohmann::json::parse(io::read_file_bytes(truth_json));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad truth manifest " + truth_json.string() + ": " + e.what());
    }
    std::vector<std::string> junk;
    for (const auto& [id, label] : truth.at("labels").items())
        if (label.get<std::string>() == "junk") junk.push_back(id);
    return junk;
}

}  // namespace cryoreduce
