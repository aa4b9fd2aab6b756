#ifndef CRYOREDUCE_SYNTH_HPP
#define CRYOREDUCE_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cryoreduce/image.hpp"

namespace cryoreduce {

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t good_count = 90;
    std::size_t junk_count = 10;
    std::size_t width = 32;
    std::size_t height = 32;
};

struct SynthStack {
    std::vector<ImageRecord> images;   // generation order (good/junk interleaved)
    std::vector<bool> is_junk;         // aligned with images
};

// Deterministic synthetic micrograph stack. Good images share a smooth
// background field plus a few Gaussian particle blobs and low noise; junk
// images are either structureless high-amplitude noise or a steep "carbon"
// gradient. Every pixel passes through float32 so the values survive an MRC
// mode-2 round trip bit-exactly. Requires dims >= 4 and at least one image.
SynthStack generate_stack(const SynthConfig& config);

// Writes the stack under `out_dir`:
//   as_mrc = false: one raw .f64 file per image + manifest.csv (id,w,h,path)
//   as_mrc = true:  a single stack.mrc (mode 2)
// plus truth.json mapping each id to its planted label.
void write_synth_stack(const SynthStack& stack, const std::filesystem::path& out_dir,
                       bool as_mrc);

// Reads truth.json back: ids that were planted as junk.
std::vector<std::string> load_truth_junk_ids(const std::filesystem::path& truth_json);

}  // namespace cryoreduce

#endif
